#include "streetlabel/osm.hpp"

#include <expat.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <memory>
#include <type_traits>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "streetlabel/error.hpp"

namespace streetlabel::osm {

std::optional<std::string_view> OsmWay::tag(std::string_view key) const {
  auto it = tags.find(key);
  if (it == tags.end()) return std::nullopt;
  return std::string_view(it->second);
}

RoadNetwork RoadNetwork::build(std::map<NodeId, OsmNode> nodes, std::map<WayId, OsmWay> ways) {
  RoadNetwork net;
  net.nodes_ = std::move(nodes);
  net.ways_ = std::move(ways);
  for (const auto& [id, way] : net.ways_) {
    if (way.node_ids.size() < 2) {
      throw DataError("way " + std::to_string(id) + " has fewer than 2 nodes");
    }
    for (std::size_t i = 0; i < way.node_ids.size(); ++i) {
      const NodeId n = way.node_ids[i];
      if (!net.nodes_.contains(n)) {
        throw DataError("way " + std::to_string(id) + " references missing node " +
                        std::to_string(n));
      }
      if (i > 0 && way.node_ids[i - 1] == n) {
        throw DataError("way " + std::to_string(id) + " repeats node " + std::to_string(n));
      }
      net.incidence_[n].push_back({id, i});
    }
  }
  return net;
}

const std::vector<WayPosition>& RoadNetwork::incidence(NodeId node) const {
  static const std::vector<WayPosition> kEmpty;
  auto it = incidence_.find(node);
  return it == incidence_.end() ? kEmpty : it->second;
}

const OsmNode& RoadNetwork::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw DataError("unknown node " + std::to_string(id));
  return it->second;
}

const OsmWay& RoadNetwork::way(WayId id) const {
  auto it = ways_.find(id);
  if (it == ways_.end()) throw DataError("unknown way " + std::to_string(id));
  return it->second;
}

std::size_t RoadNetwork::segment_count() const {
  std::size_t n = 0;
  for (const auto& [id, way] : ways_) n += way.segment_count();
  return n;
}

// ---------------------------------------------------------------------------
// XML parsing

namespace {

struct PendingWay {
  OsmWay way;
  std::size_t byte_offset = 0;
};

struct ParseState {
  XML_Parser parser = nullptr;
  std::map<NodeId, OsmNode> nodes;
  std::vector<PendingWay> ways;
  std::optional<PendingWay> current_way;
  int depth = 0;
  int way_depth = -1;
  int relation_depth = -1;
  std::string error;
  std::size_t error_offset = 0;

  void fail(std::string message) {
    if (error.empty()) {
      error = std::move(message);
      error_offset = static_cast<std::size_t>(XML_GetCurrentByteIndex(parser));
      XML_StopParser(parser, XML_FALSE);
    }
  }
};

const char* find_attr(const XML_Char** attrs, std::string_view name) {
  for (int i = 0; attrs[i] != nullptr; i += 2) {
    if (name == attrs[i]) return attrs[i + 1];
  }
  return nullptr;
}

template <typename T>
bool parse_number(const char* text, T& out) {
  if (text == nullptr) return false;
  const std::string_view s(text);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
  auto& st = *static_cast<ParseState*>(user);
  ++st.depth;
  const std::string_view el(name);
  if (st.relation_depth >= 0) return;

  if (el == "relation") {
    st.relation_depth = st.depth;
  } else if (el == "node") {
    OsmNode node;
    if (!parse_number(find_attr(attrs, "id"), node.id)) return st.fail("node without valid id");
    if (!parse_number(find_attr(attrs, "lat"), node.loc.lat_deg) ||
        !parse_number(find_attr(attrs, "lon"), node.loc.lon_deg)) {
      return st.fail("node " + std::to_string(node.id) + " without valid lat/lon");
    }
    try {
      geo::validate(node.loc);
    } catch (const Error& e) {
      return st.fail("node " + std::to_string(node.id) + ": " + e.what());
    }
    if (!st.nodes.emplace(node.id, node).second) {
      return st.fail("duplicate node id " + std::to_string(node.id));
    }
  } else if (el == "way") {
    PendingWay pw;
    if (!parse_number(find_attr(attrs, "id"), pw.way.id)) return st.fail("way without valid id");
    pw.byte_offset = static_cast<std::size_t>(XML_GetCurrentByteIndex(st.parser));
    st.current_way = std::move(pw);
    st.way_depth = st.depth;
  } else if (st.current_way && st.depth == st.way_depth + 1) {
    if (el == "nd") {
      NodeId ref = 0;
      if (!parse_number(find_attr(attrs, "ref"), ref)) return st.fail("nd without valid ref");
      st.current_way->way.node_ids.push_back(ref);
    } else if (el == "tag") {
      const char* k = find_attr(attrs, "k");
      const char* v = find_attr(attrs, "v");
      if (k == nullptr || v == nullptr) return st.fail("tag without k/v");
      st.current_way->way.tags[k] = v;
    }
  }
}

void on_end(void* user, const XML_Char* /*name*/) {
  auto& st = *static_cast<ParseState*>(user);
  if (st.relation_depth == st.depth) {
    st.relation_depth = -1;
  } else if (st.current_way && st.way_depth == st.depth) {
    st.ways.push_back(std::move(*st.current_way));
    st.current_way.reset();
    st.way_depth = -1;
  }
  --st.depth;
}

}  // namespace

ParseResult parse_osm(std::string_view xml) {
  ParseState st;
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  if (!parser) throw DataError("cannot create XML parser");
  st.parser = parser.get();
  XML_SetUserData(st.parser, &st);
  XML_SetElementHandler(st.parser, &on_start, &on_end);

  // Feed in chunks so inputs beyond INT_MAX bytes still work.
  constexpr std::size_t kChunk = std::size_t{1} << 26;
  std::size_t pos = 0;
  do {
    const std::size_t n = std::min(kChunk, xml.size() - pos);
    const bool last = pos + n == xml.size();
    const auto status = XML_Parse(st.parser, xml.data() + pos, static_cast<int>(n), last);
    if (!st.error.empty()) throw XmlParseError(st.error, st.error_offset);
    if (status != XML_STATUS_OK) {
      throw XmlParseError(XML_ErrorString(XML_GetErrorCode(st.parser)),
                          static_cast<std::size_t>(XML_GetCurrentByteIndex(st.parser)));
    }
    pos += n;
  } while (pos < xml.size());

  ParseResult result;
  std::map<WayId, OsmWay> ways;
  for (auto& pw : st.ways) {
    OsmWay& way = pw.way;
    const auto missing = std::find_if(way.node_ids.begin(), way.node_ids.end(),
                                      [&](NodeId n) { return !st.nodes.contains(n); });
    if (missing != way.node_ids.end()) {
      ++result.dropped_ways;
      result.diagnostics.warn("dropped_way", "way " + std::to_string(way.id) +
                                                 " references missing node " +
                                                 std::to_string(*missing));
      continue;
    }
    way.node_ids.erase(std::unique(way.node_ids.begin(), way.node_ids.end()), way.node_ids.end());
    if (way.node_ids.size() < 2) {
      ++result.dropped_ways;
      result.diagnostics.warn("dropped_way",
                              "way " + std::to_string(way.id) + " has fewer than 2 nodes");
      continue;
    }
    const WayId id = way.id;
    if (!ways.emplace(id, std::move(way)).second) {
      throw XmlParseError("duplicate way id " + std::to_string(id), pw.byte_offset);
    }
  }
  result.network = RoadNetwork::build(std::move(st.nodes), std::move(ways));
  return result;
}

namespace {

std::string read_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw MissingInputError("cannot open " + path.string());
  std::string out;
  std::array<char, 1 << 16> buf{};
  for (;;) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      gzclose(f);
      throw DataError("gzip read error in " + path.string());
    }
    if (n == 0) break;
    out.append(buf.data(), static_cast<std::size_t>(n));
  }
  gzclose(f);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::string shortest(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void append_escaped(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      case '\n': out += "&#10;"; break;
      case '\t': out += "&#9;"; break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
}

}  // namespace

ParseResult load_osm_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingInputError("missing OSM file " + path.string());
  const bool gz = path.extension() == ".gz";
  return parse_osm(gz ? read_gzip(path) : read_file(path));
}

std::string to_osm_xml(const RoadNetwork& net) {
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"streetlabel\">\n";
  for (const auto& [id, node] : net.nodes()) {
    out += "  <node id=\"" + std::to_string(id) + "\" lat=\"" + shortest(node.loc.lat_deg) +
           "\" lon=\"" + shortest(node.loc.lon_deg) + "\"/>\n";
  }
  for (const auto& [id, way] : net.ways()) {
    out += "  <way id=\"" + std::to_string(id) + "\">\n";
    for (NodeId n : way.node_ids) out += "    <nd ref=\"" + std::to_string(n) + "\"/>\n";
    for (const auto& [k, v] : way.tags) {
      out += "    <tag k=\"";
      append_escaped(out, k);
      out += "\" v=\"";
      append_escaped(out, v);
      out += "\"/>\n";
    }
    out += "  </way>\n";
  }
  out += "</osm>\n";
  return out;
}

std::set<std::string, std::less<>> default_highway_allowlist(bool include_service) {
  std::set<std::string, std::less<>> s;
  for (const char* base : {"motorway", "trunk", "primary", "secondary", "tertiary"}) {
    s.emplace(base);
    s.emplace(std::string(base) + "_link");
  }
  s.emplace("unclassified");
  s.emplace("residential");
  s.emplace("living_street");
  if (include_service) s.emplace("service");
  return s;
}

RoadNetwork filter_roads(const RoadNetwork& net,
                         const std::set<std::string, std::less<>>& allowlist) {
  std::map<WayId, OsmWay> kept;
  for (const auto& [id, way] : net.ways()) {
    const auto hw = way.tag("highway");
    if (hw && allowlist.contains(*hw)) kept.emplace(id, way);
  }
  return RoadNetwork::build(net.nodes(), std::move(kept));
}

// ---------------------------------------------------------------------------
// Geometry

ProjectedNetwork::ProjectedNetwork(const RoadNetwork& net, geo::Projector proj)
    : net_(&net), proj_(proj) {
  xy_.reserve(net.nodes().size());
  for (const auto& [id, node] : net.nodes()) xy_.emplace(id, proj_.project(node.loc));
}

const geo::PlanePoint& ProjectedNetwork::xy(NodeId id) const {
  auto it = xy_.find(id);
  if (it == xy_.end()) throw DataError("unknown node " + std::to_string(id));
  return it->second;
}

std::pair<geo::PlanePoint, geo::PlanePoint> ProjectedNetwork::segment(WayId way,
                                                                      std::size_t index) const {
  const OsmWay& w = net_->way(way);
  if (index + 1 >= w.node_ids.size()) {
    throw ValidationError("segment index " + std::to_string(index) + " out of range for way " +
                          std::to_string(way));
  }
  return {xy(w.node_ids[index]), xy(w.node_ids[index + 1])};
}

geo::Projector default_projector(const RoadNetwork& net) {
  if (net.incidence().empty()) throw DataError("cannot pick a projection for an empty network");
  double lat_lo = std::numeric_limits<double>::infinity();
  double lat_hi = -lat_lo;
  double lon_lo = lat_lo;
  double lon_hi = -lat_lo;
  for (const auto& [id, positions] : net.incidence()) {
    const auto& loc = net.node(id).loc;
    lat_lo = std::min(lat_lo, loc.lat_deg);
    lat_hi = std::max(lat_hi, loc.lat_deg);
    lon_lo = std::min(lon_lo, loc.lon_deg);
    lon_hi = std::max(lon_hi, loc.lon_deg);
  }
  return geo::Projector({(lat_lo + lat_hi) / 2.0, (lon_lo + lon_hi) / 2.0});
}

namespace {

// Heading from node `index` of `way` stepping by `step` (+1/-1) until the
// polyline leaves the starting point. Empty when every step is zero length.
std::optional<double> arm_heading(const ProjectedNetwork& net, const OsmWay& way,
                                  std::size_t index, int step) {
  const auto& origin = net.xy(way.node_ids[index]);
  auto i = static_cast<std::ptrdiff_t>(index) + step;
  const auto n = static_cast<std::ptrdiff_t>(way.node_ids.size());
  for (; i >= 0 && i < n; i += step) {
    const auto& p = net.xy(way.node_ids[static_cast<std::size_t>(i)]);
    if (p != origin) return geo::bearing(origin, p);
  }
  return std::nullopt;
}

}  // namespace

std::vector<Junction> find_junctions(const ProjectedNetwork& pnet, JunctionMode mode) {
  const RoadNetwork& net = pnet.network();
  std::vector<NodeId> ids;
  ids.reserve(net.incidence().size());
  for (const auto& [id, positions] : net.incidence()) {
    if (positions.size() >= 2) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  std::vector<Junction> out;
  for (NodeId id : ids) {
    const auto& positions = net.incidence(id);
    std::set<WayId> distinct;
    for (const auto& wp : positions) distinct.insert(wp.way);
    if (distinct.size() < 2) continue;

    Junction j;
    j.node_id = id;
    j.location = net.node(id).loc;
    for (const auto& wp : positions) {
      const OsmWay& way = net.way(wp.way);
      for (int step : {-1, +1}) {
        if (auto h = arm_heading(pnet, way, wp.index, step)) j.arms.push_back({wp.way, *h});
      }
    }
    if (mode == JunctionMode::kContinuationFiltered && j.arms.size() < 3) continue;
    if (j.arms.size() < 2) continue;
    out.push_back(std::move(j));
  }
  return out;
}

double way_tangent(const ProjectedNetwork& net, WayId way, std::size_t segment_index, Sense sense) {
  const auto [a, b] = net.segment(way, segment_index);
  return sense == Sense::kForward ? geo::bearing(a, b) : geo::bearing(b, a);
}

TravelDirections travel_directions(const OsmWay& way, Diagnostics* diag) {
  const auto v = way.tag("oneway");
  if (!v || *v == "no") return TravelDirections::kBoth;
  if (*v == "yes" || *v == "1" || *v == "true") return TravelDirections::kForwardOnly;
  if (*v == "-1") return TravelDirections::kBackwardOnly;
  if (diag != nullptr) {
    diag->warn("oneway_unrecognized",
               "way " + std::to_string(way.id) + " oneway=" + std::string(*v));
  }
  return TravelDirections::kBoth;
}

std::string_view to_string(TravelDirections d) {
  switch (d) {
    case TravelDirections::kBoth: return "both";
    case TravelDirections::kForwardOnly: return "forward-only";
    case TravelDirections::kBackwardOnly: return "backward-only";
  }
  return "both";
}

std::string_view to_string(JunctionMode m) {
  return m == JunctionMode::kSharedNode ? "shared" : "continuation";
}

JunctionMode parse_junction_mode(std::string_view s) {
  if (s == "shared") return JunctionMode::kSharedNode;
  if (s == "continuation") return JunctionMode::kContinuationFiltered;
  throw ValidationError("unknown junction mode '" + std::string(s) + "'");
}

}  // namespace streetlabel::osm
