#include "streetlabel/synthkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "json.hpp"
#include "streetlabel/error.hpp"
#include "streetlabel/rng.hpp"

namespace streetlabel::synth {

using geo::PlanePoint;
using osm::NodeId;
using osm::WayId;

void CityParams::validate() const {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw ValidationError("city needs at least two crossings");
  if (!(block_m > 0.0)) throw ValidationError("block_m must be positive");
  if (!(stub_m >= 0.0)) throw ValidationError("stub_m must be >= 0");
  for (double f : {oneway_fraction, speed_tag_fraction, lanes_tag_fraction, bike_fraction,
                   footway_fraction, split_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("fractions must lie in [0, 1]");
  }
  if (speed_palette.empty() || lane_palette.empty()) throw ValidationError("empty tag palette");
  if (diagonal && rows != cols) throw ValidationError("diagonal avenue needs rows == cols");
  geo::validate(origin);
}

namespace {

const std::vector<std::string>& highway_palette() {
  static const std::vector<std::string> p{"residential", "residential", "tertiary", "secondary", "primary"};
  return p;
}

PlanePoint add(PlanePoint a, PlanePoint b) { return {a.x_m + b.x_m, a.y_m + b.y_m}; }
PlanePoint scale(PlanePoint a, double k) { return {a.x_m * k, a.y_m * k}; }
double dot(PlanePoint a, PlanePoint b) { return a.x_m * b.x_m + a.y_m * b.y_m; }
PlanePoint sub(PlanePoint a, PlanePoint b) { return {a.x_m - b.x_m, a.y_m - b.y_m}; }

struct Builder {
  const CityParams& p;
  Rng rng;
  NodeId next_node = 1;
  WayId next_way = 1;
  std::map<NodeId, osm::OsmNode> nodes;
  std::map<WayId, osm::OsmWay> ways;
  CityTruth truth;
  geo::Projector proj;

  explicit Builder(const CityParams& params)
      : p(params), rng(mix64(params.seed ^ 0x6369747967656eULL)), proj(params.origin) {}

  NodeId node(PlanePoint xy) {
    const NodeId id = next_node++;
    nodes[id] = osm::OsmNode{id, proj.unproject(xy)};
    truth.node_xy[id] = xy;
    return id;
  }

  // Tags and truth for a road way laid along `ids` (already in final order).
  void road(std::vector<NodeId> ids) {
    if (rng.bernoulli(0.5)) std::reverse(ids.begin(), ids.end());
    WayTruth t;
    t.id = next_way++;
    t.highway = highway_palette()[rng.below(highway_palette().size())];
    osm::TagMap tags{{"highway", t.highway}, {"name", fmt::format("Street {}", t.id)}};

    if (rng.bernoulli(p.oneway_fraction)) {
      const double r = rng.uniform01();
      if (r < 0.6) {
        tags["oneway"] = "yes";
        t.directions = osm::TravelDirections::kForwardOnly;
      } else if (r < 0.75) {
        tags["oneway"] = "1";
        t.directions = osm::TravelDirections::kForwardOnly;
      } else {
        tags["oneway"] = "-1";
        t.directions = osm::TravelDirections::kBackwardOnly;
      }
    } else if (rng.bernoulli(0.3)) {
      tags["oneway"] = "no";
    }

    if (rng.bernoulli(p.speed_tag_fraction)) {
      const auto& c = p.speed_palette[rng.below(p.speed_palette.size())];
      tags["maxspeed"] = c.tag;
      t.speed_mph = c.mph;
    }
    if (rng.bernoulli(p.lanes_tag_fraction)) {
      const auto& c = p.lane_palette[rng.below(p.lane_palette.size())];
      tags["lanes"] = c.tag;
      t.lanes = c.lanes;
    }
    if (rng.bernoulli(p.bike_fraction)) {
      tags["cycleway"] = "lane";
      t.bike = BikeTruth::kPositive;
    } else {
      const double r = rng.uniform01();
      if (r < 0.4) {
        t.bike = BikeTruth::kNegative;
      } else if (r < 0.7) {
        tags["cycleway"] = "no";
        t.bike = BikeTruth::kNegative;
      } else {
        tags["cycleway"] = "track";
        t.bike = BikeTruth::kNone;
      }
    }

    t.forward_bearing_deg = geo::bearing(truth.node_xy.at(ids[0]), truth.node_xy.at(ids[1]));
    t.node_ids = ids;
    truth.segment_count += ids.size() - 1;
    ways[t.id] = osm::OsmWay{t.id, std::move(ids), std::move(tags)};
    truth.ways[t.id] = std::move(t);
    ++truth.road_way_count;
  }

  void footway(std::vector<NodeId> ids) {
    WayTruth t;
    t.id = next_way++;
    t.highway = "footway";
    t.road = false;
    t.forward_bearing_deg = geo::bearing(truth.node_xy.at(ids[0]), truth.node_xy.at(ids[1]));
    t.node_ids = ids;
    ways[t.id] = osm::OsmWay{t.id, std::move(ids), {{"highway", "footway"}}};
    truth.ways[t.id] = std::move(t);
    ++truth.footway_count;
  }

  // Lays one street through `vertices`, splitting edges mid-way at random.
  void street(const std::vector<NodeId>& vertices) {
    std::vector<NodeId> run{vertices.front()};
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if (rng.bernoulli(p.split_fraction)) {
        const PlanePoint a = truth.node_xy.at(vertices[i - 1]);
        const PlanePoint b = truth.node_xy.at(vertices[i]);
        const NodeId mid = node(scale(add(a, b), 0.5));
        ++truth.split_nodes;
        run.push_back(mid);
        road(run);
        run = {mid};
      }
      run.push_back(vertices[i]);
    }
    road(run);
  }
};

}  // namespace

City gen_city(const CityParams& params) {
  params.validate();
  Builder b(params);
  const std::size_t R = params.rows;
  const std::size_t C = params.cols;
  const double x0 = -0.5 * static_cast<double>(C - 1) * params.block_m;
  const double y0 = -0.5 * static_cast<double>(R - 1) * params.block_m;
  auto at = [&](double i, double j) {
    return PlanePoint{x0 + j * params.block_m, y0 + i * params.block_m};
  };

  std::vector<std::vector<NodeId>> cross(R, std::vector<NodeId>(C));
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) cross[i][j] = b.node(at(double(i), double(j)));
  }
  const double stub = params.stub_m / params.block_m;

  // East-west streets, then north-south.
  for (std::size_t i = 0; i < R; ++i) {
    if (C == 1 && stub == 0.0) continue;
    std::vector<NodeId> v;
    if (stub > 0.0) v.push_back(b.node(at(double(i), -stub)));
    for (std::size_t j = 0; j < C; ++j) v.push_back(cross[i][j]);
    if (stub > 0.0) v.push_back(b.node(at(double(i), double(C - 1) + stub)));
    b.street(v);
  }
  for (std::size_t j = 0; j < C; ++j) {
    if (R == 1 && stub == 0.0) continue;
    std::vector<NodeId> v;
    if (stub > 0.0) v.push_back(b.node(at(-stub, double(j))));
    for (std::size_t i = 0; i < R; ++i) v.push_back(cross[i][j]);
    if (stub > 0.0) v.push_back(b.node(at(double(R - 1) + stub, double(j))));
    b.street(v);
  }
  if (params.diagonal && R >= 2) {
    std::vector<NodeId> v;
    for (std::size_t k = 0; k < R; ++k) v.push_back(cross[k][k]);
    b.road(v);
  }

  for (std::size_t i = 0; i + 1 < R; ++i) {
    for (std::size_t j = 0; j + 1 < C; ++j) {
      if (!b.rng.bernoulli(params.footway_fraction)) continue;
      const PlanePoint c = at(double(i) + 0.5, double(j) + 0.5);
      const NodeId w = b.node(add(c, {-20.0, -12.0}));
      const NodeId e = b.node(add(c, {20.0, -12.0}));
      if (b.rng.bernoulli(0.5)) {
        b.footway({cross[i][j], w, e});
      } else {
        b.footway({w, e});
      }
    }
  }

  // Junctions by construction: arms of every crossing.
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      std::vector<double> arms;
      const bool any_stub = stub > 0.0;
      if (i + 1 < R || any_stub) arms.push_back(0.0);
      if (j + 1 < C || any_stub) arms.push_back(90.0);
      if (i > 0 || any_stub) arms.push_back(180.0);
      if (j > 0 || any_stub) arms.push_back(270.0);
      if (params.diagonal && i == j && R >= 2) {
        if (i + 1 < R) arms.push_back(45.0);
        if (i > 0) arms.push_back(225.0);
      }
      if (arms.size() < 3) continue;
      std::sort(arms.begin(), arms.end());
      b.truth.junctions.push_back({cross[i][j], b.truth.node_xy.at(cross[i][j]), std::move(arms)});
    }
  }
  std::sort(b.truth.junctions.begin(), b.truth.junctions.end(),
            [](const JunctionTruth& x, const JunctionTruth& y) { return x.node < y.node; });

  b.truth.origin = params.origin;
  b.truth.node_count = b.nodes.size();
  b.truth.way_count = b.ways.size();
  City city;
  city.osm_xml = osm::to_osm_xml(osm::RoadNetwork::build(std::move(b.nodes), std::move(b.ways)));
  city.truth = std::move(b.truth);
  return city;
}

// ---------------------------------------------------------------------------
// Panoramas

namespace {

struct Candidate {
  PlanePoint xy;
  double azimuth = 0.0;
  PanoTruth truth;
  std::size_t chain = 0;
};

double seg_distance(PlanePoint p, PlanePoint a, PlanePoint b) {
  return geo::point_segment_distance(p, a, b).dist_m;
}

}  // namespace

PanoSet gen_panos(const City& city, const PanoParams& params, double junction_radius_m) {
  if (!(params.spacing_m > 0.0)) throw ValidationError("pano spacing must be positive");
  if (!(params.end_margin_m >= 0.0) || !(params.lateral_offset_m >= 0.0) || !(params.noise_m >= 0.0)) {
    throw ValidationError("pano offsets must be >= 0");
  }
  const CityTruth& ct = city.truth;
  Rng rng(mix64(params.seed ^ 0x70616e6f73ULL));
  PanoSet out;
  std::vector<Candidate> cands;
  std::size_t chain = 0;

  for (const auto& [wid, w] : ct.ways) {
    if (!w.road) continue;
    for (osm::Sense sense : {osm::Sense::kForward, osm::Sense::kBackward}) {
      if (sense == osm::Sense::kForward && w.directions == osm::TravelDirections::kBackwardOnly) continue;
      if (sense == osm::Sense::kBackward && w.directions == osm::TravelDirections::kForwardOnly) continue;
      const double heading =
          geo::wrap360(w.forward_bearing_deg + (sense == osm::Sense::kForward ? 0.0 : 180.0));
      const PlanePoint right = geo::heading_vector(heading + 90.0);
      ++chain;
      std::vector<NodeId> ids = w.node_ids;
      if (sense == osm::Sense::kBackward) std::reverse(ids.begin(), ids.end());
      for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
        const PlanePoint a = ct.node_xy.at(ids[k]);
        const PlanePoint b = ct.node_xy.at(ids[k + 1]);
        const double len = geo::distance(a, b);
        const PlanePoint u = scale(sub(b, a), 1.0 / len);
        for (double s = params.end_margin_m; s <= len - params.end_margin_m + 1e-9; s += params.spacing_m) {
          Candidate c;
          PlanePoint xy = add(add(a, scale(u, s)), scale(right, params.lateral_offset_m));
          xy.x_m += rng.uniform(-params.noise_m, params.noise_m);
          xy.y_m += rng.uniform(-params.noise_m, params.noise_m);
          c.xy = xy;
          c.azimuth = geo::wrap360(heading + rng.uniform(-params.azimuth_noise_deg, params.azimuth_noise_deg));
          c.truth.way = wid;
          c.truth.distance_m = std::abs(dot(sub(xy, a), geo::heading_vector(heading + 90.0)));
          c.truth.forward_heading_deg = heading;
          c.truth.travel_sense = sense;
          c.chain = chain;
          cands.push_back(std::move(c));
        }
      }
    }
  }

  // Off-road panoramas at block centres; blocks cut by the diagonal are skipped.
  {
    // Block centres from the crossing coordinates.
    std::set<double> xs;
    std::set<double> ys;
    for (const auto& j : ct.junctions) {
      xs.insert(j.xy.x_m);
      ys.insert(j.xy.y_m);
    }
    std::vector<double> vx(xs.begin(), xs.end());
    std::vector<double> vy(ys.begin(), ys.end());
    for (std::size_t i = 0; i + 1 < vy.size(); ++i) {
      for (std::size_t j = 0; j + 1 < vx.size(); ++j) {
        if (!rng.bernoulli(params.plaza_fraction)) continue;
        const PlanePoint c{0.5 * (vx[j] + vx[j + 1]), 0.5 * (vy[i] + vy[i + 1])};
        Candidate cand;
        cand.xy = c;
        cand.azimuth = geo::wrap360(rng.uniform(0.0, 360.0));
        cand.truth.offroad = true;
        cand.chain = ++chain;
        cands.push_back(std::move(cand));
      }
    }
  }

  // Drop candidates that are not strictly nearest to their own road, and
  // plazas that happen to sit within reach of a road (diagonal blocks).
  std::vector<std::pair<PlanePoint, PlanePoint>> segs;
  std::vector<WayId> seg_way;
  for (const auto& [wid, w] : ct.ways) {
    if (!w.road) continue;
    for (std::size_t k = 0; k + 1 < w.node_ids.size(); ++k) {
      segs.emplace_back(ct.node_xy.at(w.node_ids[k]), ct.node_xy.at(w.node_ids[k + 1]));
      seg_way.push_back(wid);
    }
  }
  std::vector<Candidate> kept;
  for (auto& c : cands) {
    bool ok = true;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const double d = seg_distance(c.xy, segs[s].first, segs[s].second);
      nearest = std::min(nearest, d);
      if (!c.truth.offroad && seg_way[s] != c.truth.way && d <= c.truth.distance_m + 1e-6) ok = false;
    }
    if (c.truth.offroad) {
      c.truth.distance_m = nearest;
      ok = nearest > 2.0 * params.lateral_offset_m + 2.0 * params.noise_m + 10.0;
    }
    if (ok) {
      kept.push_back(std::move(c));
    } else {
      ++out.dropped_ambiguous;
    }
  }

  const geo::Projector proj(ct.origin);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto& c = kept[i];
    c.truth.pano_id = fmt::format("sp{:06d}", i);
    c.truth.xy = c.xy;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& j : ct.junctions) {
      const double d = geo::distance(c.xy, j.xy);
      if (d < best) {
        best = d;
        c.truth.junction = j.node;
        c.truth.junction_distance_m = d;
        c.truth.junction_bearing_deg = d > 0.0 ? geo::bearing(c.xy, j.xy) : c.truth.forward_heading_deg;
      }
      if (!c.truth.offroad && d <= junction_radius_m) {
        c.truth.driveable_headings.insert(c.truth.driveable_headings.end(), j.arm_headings.begin(),
                                          j.arm_headings.end());
      }
    }
    if (!c.truth.offroad) {
      c.truth.driveable_headings.push_back(c.truth.forward_heading_deg);
      c.truth.driveable_headings.push_back(geo::wrap360(c.truth.forward_heading_deg + 180.0));
      std::sort(c.truth.driveable_headings.begin(), c.truth.driveable_headings.end());
    }
  }

  // Neighbor links: consecutive panos of a pass, plus anything within the
  // link radius; plazas hook onto their nearest road pano.
  std::vector<std::set<std::size_t>> links(kept.size());
  auto link = [&](std::size_t a, std::size_t b) {
    if (a == b) return;
    links[a].insert(b);
    links[b].insert(a);
  };
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
    if (kept[i].chain == kept[i + 1].chain && !kept[i].truth.offroad) link(i, i + 1);
  }
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i].truth.offroad) {
      std::size_t best = i;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < kept.size(); ++j) {
        if (kept[j].truth.offroad) continue;
        const double d = geo::distance(kept[i].xy, kept[j].xy);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      link(i, best);
      continue;
    }
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      if (kept[j].truth.offroad) continue;
      if (geo::distance(kept[i].xy, kept[j].xy) <= params.link_radius_m) link(i, j);
    }
  }

  std::vector<std::string> ids;
  for (const auto& c : kept) ids.push_back(c.truth.pano_id);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto& c = kept[i];
    pano::PanoMeta m;
    m.pano_id = c.truth.pano_id;
    m.loc = proj.unproject(c.xy);
    m.azimuth_deg = c.azimuth;
    for (std::size_t j : links[i]) m.neighbors.push_back(ids[j]);
    m.capture_date = pano::YearMonth{2016 + static_cast<int>(rng.below(6)), 1 + static_cast<int>(rng.below(12))};
    out.panos.push_back(std::move(m));
    out.truth[c.truth.pano_id] = std::move(c.truth);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

Image render_pano(const pano::PanoMeta& meta, const PanoTruth& truth, const CityTruth& city,
                  double driveable_tol_deg, double bike_offset_deg, std::size_t width,
                  std::size_t height) {
  Image img(width, height, kSky);
  BikeTruth bike = BikeTruth::kNone;
  if (!truth.offroad) {
    if (auto it = city.ways.find(truth.way); it != city.ways.end()) bike = it->second.bike;
  }
  const double bike_dir = truth.forward_heading_deg + bike_offset_deg;
  const double w = static_cast<double>(width);
  for (std::size_t c = 0; c < width; ++c) {
    const double az = meta.azimuth_deg - 180.0 + (static_cast<double>(c) + 0.5) * 360.0 / w;
    bool road = false;
    for (double h : truth.driveable_headings) {
      if (std::abs(geo::angdiff(az, h)) <= driveable_tol_deg) road = true;
    }
    const bool stripe =
        truth.junction && std::abs(geo::angdiff(az, truth.junction_bearing_deg)) <= kStripeHalfWidthDeg;
    const bool band = bike != BikeTruth::kNone && std::abs(geo::angdiff(az, bike_dir)) <= kBikeBandHalfWidthDeg;
    for (std::size_t r = 0; r < height; ++r) {
      Rgb px = r < height / 2 ? kSky : (road ? kRoad : kGround);
      if (band && r >= height - height / 4) px = bike == BikeTruth::kPositive ? kBikeLaneBand : kNoBikeLaneBand;
      if (stripe) px = kJunctionStripe;
      img.set(c, r, px);
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

constexpr double kEps = 1e-4;
// Distances survive the manifest's 6-decimal rounding to within 5e-7 m.
constexpr double kDistanceEps = 1e-6;

bool near_heading(double a, double b) { return std::abs(geo::angdiff(a, b)) <= kEps; }

}  // namespace

VerifyReport verify_labels(const std::vector<LabeledSample>& samples, const CityTruth& city,
                           const PanoSet& panos, const ThresholdConfig& cfg,
                           const labelgen::LabelOptions& options) {
  VerifyReport rep;
  std::map<std::pair<std::string, Task>, std::vector<const LabeledSample*>> by_key;
  for (const auto& s : samples) {
    if (is_duplicate_id(s.sample_id)) continue;
    if (!panos.truth.contains(s.pano_id())) {
      rep.mismatches.push_back(fmt::format("{}: unknown pano {}", s.sample_id, s.pano_id()));
      continue;
    }
    by_key[{s.pano_id(), s.task()}].push_back(&s);
    ++rep.checked;
  }

  auto fail = [&](const std::string& pano_id, Task t, const std::string& what) {
    rep.mismatches.push_back(fmt::format("{} {}: {}", pano_id, to_string(t), what));
  };

  for (const auto& [id, gt] : panos.truth) {
    for (Task task : kAllTasks) {
      const auto it = by_key.find({id, task});
      const std::vector<const LabeledSample*> got =
          it == by_key.end() ? std::vector<const LabeledSample*>{} : it->second;
      const bool on = options.tasks.contains(task);

      std::size_t expected = 0;
      if (on && !gt.offroad) {
        const WayTruth& w = city.ways.at(gt.way);
        const bool has_j = gt.junction.has_value();
        const double d = gt.junction_distance_m;
        const bool positive = has_j && d <= cfg.inter_pos_max_m;
        const bool negative = !has_j || d >= cfg.inter_neg_min_m;
        const bool one_way = w.directions != osm::TravelDirections::kBoth;
        switch (task) {
          case Task::kIntersection: expected = positive || negative ? 1 : 0; break;
          case Task::kIntersectionDistance: expected = positive && d > 0.0 ? 1 : 0; break;
          case Task::kDriveable: expected = options.driveable_headings; break;
          case Task::kHeadingAngle: expected = !has_j || d >= cfg.heading_excl_m ? options.repeat : 0; break;
          case Task::kBikeLane: expected = w.bike == BikeTruth::kNone ? 0 : 1; break;
          case Task::kSpeedLimit: expected = w.speed_mph ? 1 : 0; break;
          case Task::kOneWay: expected = 1; break;
          case Task::kWrongWay: expected = 2 * options.repeat; break;
          case Task::kNumLanes: expected = one_way && w.lanes ? 1 : 0; break;
        }
        for (const LabeledSample* s : got) {
          if (s->way_id != gt.way) fail(id, task, fmt::format("way {} != {}", s->way_id, gt.way));
          const double h = s->crop.heading_deg;
          switch (task) {
            case Task::kIntersection:
              if (s->label.flag() != positive) fail(id, task, "label");
              if (!near_heading(h, positive ? gt.junction_bearing_deg : gt.forward_heading_deg)) {
                fail(id, task, fmt::format("heading {}", h));
              }
              break;
            case Task::kIntersectionDistance:
              if (std::abs(s->label.real() - d) > kDistanceEps) fail(id, task, fmt::format("{} != {}", s->label.real(), d));
              break;
            case Task::kDriveable: {
              bool drive = false;
              for (double r : gt.driveable_headings) {
                if (std::abs(geo::angdiff(h, r)) <= cfg.driveable_tol_deg) drive = true;
              }
              if (s->label.flag() != drive) fail(id, task, fmt::format("heading {} label {}", h, s->label.flag()));
              break;
            }
            case Task::kHeadingAngle: {
              const double off = geo::angdiff(h, gt.forward_heading_deg);
              if (std::abs(s->label.real() - off) > kEps || std::abs(s->label.real()) > cfg.heading_max_offset_deg) {
                fail(id, task, fmt::format("offset {} vs {}", s->label.real(), off));
              }
              break;
            }
            case Task::kBikeLane: {
              const double sign = options.handedness == Handedness::kRight ? 1.0 : -1.0;
              if (s->label.flag() != (w.bike == BikeTruth::kPositive)) fail(id, task, "label");
              if (!near_heading(h, gt.forward_heading_deg + sign * cfg.bike_crop_offset_deg)) fail(id, task, "heading");
              break;
            }
            case Task::kSpeedLimit:
              if (w.speed_mph && std::abs(s->label.real() - *w.speed_mph) > kEps) fail(id, task, "value");
              break;
            case Task::kOneWay:
              if (s->label.flag() != one_way) fail(id, task, "label");
              break;
            case Task::kWrongWay: {
              const double tol = cfg.wrongway_tol_deg + 1e-6;
              const double ref = s->label.flag() ? gt.forward_heading_deg + 180.0 : gt.forward_heading_deg;
              if (std::abs(geo::angdiff(h, ref)) > tol) fail(id, task, fmt::format("heading {}", h));
              break;
            }
            case Task::kNumLanes:
              if (w.lanes && s->label.count() != *w.lanes) fail(id, task, "value");
              break;
          }
        }
      }
      if (got.size() != expected) {
        fail(id, task, fmt::format("{} samples, expected {}", got.size(), expected));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

namespace {

json xy_json(const PlanePoint& p) { return json::array({p.x_m, p.y_m}); }
PlanePoint xy_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

std::string_view bike_name(BikeTruth b) {
  switch (b) {
    case BikeTruth::kPositive: return "lane";
    case BikeTruth::kNegative: return "none";
    case BikeTruth::kNone: return "other";
  }
  return "other";
}

BikeTruth parse_bike(const std::string& s) {
  if (s == "lane") return BikeTruth::kPositive;
  if (s == "none") return BikeTruth::kNegative;
  return BikeTruth::kNone;
}

osm::TravelDirections parse_dirs(const std::string& s) {
  for (auto d : {osm::TravelDirections::kBoth, osm::TravelDirections::kForwardOnly,
                 osm::TravelDirections::kBackwardOnly}) {
    if (osm::to_string(d) == s) return d;
  }
  throw DataError("bad travel direction in truth file: " + s);
}

}  // namespace

std::string truth_to_json(const CityTruth& city, const PanoSet& panos) {
  json c;
  c["origin"] = {city.origin.lat_deg, city.origin.lon_deg};
  c["node_count"] = city.node_count;
  c["way_count"] = city.way_count;
  c["road_way_count"] = city.road_way_count;
  c["footway_count"] = city.footway_count;
  c["split_nodes"] = city.split_nodes;
  c["segment_count"] = city.segment_count;
  json ways = json::array();
  for (const auto& [id, w] : city.ways) {
    json jw{{"id", id},
            {"highway", w.highway},
            {"road", w.road},
            {"directions", osm::to_string(w.directions)},
            {"bike", bike_name(w.bike)},
            {"forward_bearing_deg", w.forward_bearing_deg},
            {"node_ids", w.node_ids}};
    jw["speed_mph"] = w.speed_mph ? json(*w.speed_mph) : json(nullptr);
    jw["lanes"] = w.lanes ? json(*w.lanes) : json(nullptr);
    ways.push_back(std::move(jw));
  }
  c["ways"] = std::move(ways);
  json js = json::array();
  for (const auto& j : city.junctions) {
    js.push_back({{"node", j.node}, {"xy", xy_json(j.xy)}, {"arms", j.arm_headings}});
  }
  c["junctions"] = std::move(js);
  json nx = json::object();
  for (const auto& [id, p] : city.node_xy) nx[std::to_string(id)] = xy_json(p);
  c["node_xy"] = std::move(nx);

  json ps = json::array();
  for (const auto& [id, t] : panos.truth) {
    json jp{{"pano_id", id},
            {"xy", xy_json(t.xy)},
            {"offroad", t.offroad},
            {"way", t.way},
            {"distance_m", t.distance_m},
            {"forward_heading_deg", t.forward_heading_deg},
            {"travel_sense", t.travel_sense == osm::Sense::kForward ? "forward" : "backward"},
            {"junction_distance_m", t.junction_distance_m},
            {"junction_bearing_deg", t.junction_bearing_deg},
            {"driveable_headings", t.driveable_headings}};
    jp["junction"] = t.junction ? json(*t.junction) : json(nullptr);
    ps.push_back(std::move(jp));
  }
  json root{{"city", std::move(c)}, {"panos", std::move(ps)}, {"dropped_ambiguous", panos.dropped_ambiguous}};
  return root.dump(1) + "\n";
}

void truth_from_json(const std::string& text, CityTruth& city, PanoSet& panos) {
  try {
    const json root = json::parse(text);
    const json& c = root.at("city");
    city = CityTruth{};
    city.origin = {c.at("origin").at(0).get<double>(), c.at("origin").at(1).get<double>()};
    city.node_count = c.at("node_count").get<std::size_t>();
    city.way_count = c.at("way_count").get<std::size_t>();
    city.road_way_count = c.at("road_way_count").get<std::size_t>();
    city.footway_count = c.at("footway_count").get<std::size_t>();
    city.split_nodes = c.at("split_nodes").get<std::size_t>();
    city.segment_count = c.at("segment_count").get<std::size_t>();
    for (const auto& jw : c.at("ways")) {
      WayTruth w;
      w.id = jw.at("id").get<WayId>();
      w.highway = jw.at("highway").get<std::string>();
      w.road = jw.at("road").get<bool>();
      w.directions = parse_dirs(jw.at("directions").get<std::string>());
      w.bike = parse_bike(jw.at("bike").get<std::string>());
      w.forward_bearing_deg = jw.at("forward_bearing_deg").get<double>();
      w.node_ids = jw.at("node_ids").get<std::vector<NodeId>>();
      if (!jw.at("speed_mph").is_null()) w.speed_mph = jw.at("speed_mph").get<double>();
      if (!jw.at("lanes").is_null()) w.lanes = jw.at("lanes").get<std::int64_t>();
      city.ways[w.id] = std::move(w);
    }
    for (const auto& jj : c.at("junctions")) {
      city.junctions.push_back({jj.at("node").get<NodeId>(), xy_from(jj.at("xy")),
                                jj.at("arms").get<std::vector<double>>()});
    }
    for (const auto& [k, v] : c.at("node_xy").items()) city.node_xy[std::stoll(k)] = xy_from(v);

    panos.truth.clear();
    panos.panos.clear();
    panos.dropped_ambiguous = root.at("dropped_ambiguous").get<std::size_t>();
    for (const auto& jp : root.at("panos")) {
      PanoTruth t;
      t.pano_id = jp.at("pano_id").get<std::string>();
      t.xy = xy_from(jp.at("xy"));
      t.offroad = jp.at("offroad").get<bool>();
      t.way = jp.at("way").get<WayId>();
      t.distance_m = jp.at("distance_m").get<double>();
      t.forward_heading_deg = jp.at("forward_heading_deg").get<double>();
      t.travel_sense = jp.at("travel_sense").get<std::string>() == "forward" ? osm::Sense::kForward
                                                                             : osm::Sense::kBackward;
      if (!jp.at("junction").is_null()) t.junction = jp.at("junction").get<NodeId>();
      t.junction_distance_m = jp.at("junction_distance_m").get<double>();
      t.junction_bearing_deg = jp.at("junction_bearing_deg").get<double>();
      t.driveable_headings = jp.at("driveable_headings").get<std::vector<double>>();
      panos.truth[t.pano_id] = std::move(t);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad truth file: ") + e.what());
  }
}

}  // namespace streetlabel::synth
