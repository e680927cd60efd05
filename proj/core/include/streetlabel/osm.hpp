#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "streetlabel/diagnostics.hpp"
#include "streetlabel/geo.hpp"

namespace streetlabel::osm {

using NodeId = std::int64_t;
using WayId = std::int64_t;
using TagMap = std::map<std::string, std::string, std::less<>>;

struct OsmNode {
  NodeId id = 0;
  geo::GeoPoint loc;

  friend bool operator==(const OsmNode&, const OsmNode&) = default;
};

struct OsmWay {
  WayId id = 0;
  std::vector<NodeId> node_ids;
  TagMap tags;

  std::optional<std::string_view> tag(std::string_view key) const;
  std::size_t segment_count() const { return node_ids.size() - 1; }

  friend bool operator==(const OsmWay&, const OsmWay&) = default;
};

/// Position of a node inside a way's node list.
struct WayPosition {
  WayId way = 0;
  std::size_t index = 0;

  friend bool operator==(const WayPosition&, const WayPosition&) = default;
};

/// Nodes, ways and the node -> way incidence. Immutable once built; the only
/// way to obtain one is build() (or parse/filter), which checks that every way
/// has >= 2 nodes, no consecutive duplicates, and only resolvable references.
class RoadNetwork {
 public:
  RoadNetwork() = default;

  static RoadNetwork build(std::map<NodeId, OsmNode> nodes, std::map<WayId, OsmWay> ways);

  const std::map<NodeId, OsmNode>& nodes() const { return nodes_; }
  const std::map<WayId, OsmWay>& ways() const { return ways_; }
  const std::vector<WayPosition>& incidence(NodeId node) const;
  const std::unordered_map<NodeId, std::vector<WayPosition>>& incidence() const {
    return incidence_;
  }

  const OsmNode& node(NodeId id) const;
  const OsmWay& way(WayId id) const;
  bool empty() const { return ways_.empty(); }
  std::size_t segment_count() const;

 private:
  std::map<NodeId, OsmNode> nodes_;
  std::map<WayId, OsmWay> ways_;
  std::unordered_map<NodeId, std::vector<WayPosition>> incidence_;
};

struct ParseResult {
  RoadNetwork network;
  std::size_t dropped_ways = 0;
  Diagnostics diagnostics;
};

/// Parses OSM XML. Relations are skipped. Ways with a missing node reference,
/// or fewer than two nodes after collapsing consecutive repeats, are dropped
/// and counted. Throws XmlParseError on malformed XML.
ParseResult parse_osm(std::string_view xml);

/// Reads a .osm file, gunzipping transparently when the name ends in ".gz".
ParseResult load_osm_file(const std::filesystem::path& path);

/// Canonical OSM XML dump: nodes then ways in id order, coordinates written in
/// shortest round-trip form so parse(to_osm_xml(n)) reproduces n exactly.
std::string to_osm_xml(const RoadNetwork& net);

/// highway=* values considered driveable by default.
std::set<std::string, std::less<>> default_highway_allowlist(bool include_service = false);

/// Keeps ways whose highway tag is in `allowlist`. All nodes are retained.
RoadNetwork filter_roads(const RoadNetwork& net, const std::set<std::string, std::less<>>& allowlist);

/// Network coordinates in a projector's plane, cached per node.
class ProjectedNetwork {
 public:
  /// `net` must outlive this object.
  ProjectedNetwork(const RoadNetwork& net, geo::Projector proj);

  const RoadNetwork& network() const { return *net_; }
  const geo::Projector& projector() const { return proj_; }
  const geo::PlanePoint& xy(NodeId id) const;
  /// Endpoints of segment `index` of `way` in node order.
  std::pair<geo::PlanePoint, geo::PlanePoint> segment(WayId way, std::size_t index) const;

 private:
  const RoadNetwork* net_;
  geo::Projector proj_;
  std::unordered_map<NodeId, geo::PlanePoint> xy_;
};

/// Reference point at the centre of the bounding box of all way nodes.
geo::Projector default_projector(const RoadNetwork& net);

enum class JunctionMode {
  /// Any node shared by two or more ways.
  kSharedNode,
  /// Shared nodes with at least three arms; drops mid-block way splits.
  kContinuationFiltered,
};

struct JunctionArm {
  WayId way = 0;
  double heading_deg = 0.0;
};

struct Junction {
  NodeId node_id = 0;
  geo::GeoPoint location;
  std::vector<JunctionArm> arms;
};

/// Junctions in node id order. Arms are listed per incident way position,
/// toward the previous node first, then toward the next node.
std::vector<Junction> find_junctions(const ProjectedNetwork& net,
                                     JunctionMode mode = JunctionMode::kContinuationFiltered);

enum class Sense { kForward, kBackward };

/// Heading of a segment walked in node order (forward) or reversed.
double way_tangent(const ProjectedNetwork& net, WayId way, std::size_t segment_index, Sense sense);

enum class TravelDirections { kBoth, kForwardOnly, kBackwardOnly };

/// From the oneway tag. Unrecognized values fall back to kBoth and, when
/// `diag` is given, record an "oneway_unrecognized" warning.
TravelDirections travel_directions(const OsmWay& way, Diagnostics* diag = nullptr);

std::string_view to_string(TravelDirections d);
std::string_view to_string(JunctionMode m);
JunctionMode parse_junction_mode(std::string_view s);

}  // namespace streetlabel::osm
