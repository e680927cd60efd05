#include "streetlabel/labelgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "streetlabel/error.hpp"
#include "streetlabel/rng.hpp"

namespace streetlabel::labelgen {

// ---------------------------------------------------------------------------
// JunctionLocator

JunctionLocator::JunctionLocator(const std::vector<osm::Junction>& junctions,
                                 const geo::Projector& proj, double cell_size_m)
    : cell_(cell_size_m) {
  if (!(cell_size_m > 0.0)) throw ValidationError("junction cell size must be positive");
  sites_.reserve(junctions.size());
  for (const auto& j : junctions) {
    JunctionSite s{j.node_id, proj.project(j.location), {}};
    for (const auto& arm : j.arms) s.arm_headings.push_back(arm.heading_deg);
    sites_.push_back(std::move(s));
  }
  std::sort(sites_.begin(), sites_.end(),
            [](const JunctionSite& a, const JunctionSite& b) { return a.node < b.node; });
  if (sites_.empty()) return;

  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = max_x;
  min_x_ = min_y_ = std::numeric_limits<double>::infinity();
  for (const auto& s : sites_) {
    min_x_ = std::min(min_x_, s.xy.x_m);
    min_y_ = std::min(min_y_, s.xy.y_m);
    max_x = std::max(max_x, s.xy.x_m);
    max_y = std::max(max_y, s.xy.y_m);
  }
  cols_ = static_cast<std::int64_t>(std::floor((max_x - min_x_) / cell_)) + 1;
  rows_ = static_cast<std::int64_t>(std::floor((max_y - min_y_) / cell_)) + 1;
  cells_.resize(static_cast<std::size_t>(cols_ * rows_));
  for (std::uint32_t i = 0; i < sites_.size(); ++i) {
    const auto c = static_cast<std::int64_t>(std::floor((sites_[i].xy.x_m - min_x_) / cell_));
    const auto r = static_cast<std::int64_t>(std::floor((sites_[i].xy.y_m - min_y_) / cell_));
    cells_[static_cast<std::size_t>(r * cols_ + c)].push_back(i);
  }
}

// Visits cells ring by ring around p. `fn(site_index, ring)` returns false to
// stop after the current ring.
template <typename Fn>
void JunctionLocator::scan_rings(const geo::PlanePoint& p, Fn&& fn) const {
  constexpr double kLimit = 1e15;
  const auto cx = static_cast<std::int64_t>(std::clamp(std::floor((p.x_m - min_x_) / cell_), -kLimit, kLimit));
  const auto cy = static_cast<std::int64_t>(std::clamp(std::floor((p.y_m - min_y_) / cell_), -kLimit, kLimit));
  auto outside = [](std::int64_t v, std::int64_t n) -> std::int64_t {
    return v < 0 ? -v : (v >= n ? v - n + 1 : 0);
  };
  const std::int64_t r_start = std::max(outside(cx, cols_), outside(cy, rows_));
  const std::int64_t r_end = std::max({cx, cols_ - 1 - cx, cy, rows_ - 1 - cy});
  for (std::int64_t ring = r_start; ring <= r_end; ++ring) {
    for (std::int64_t r = std::max<std::int64_t>(cy - ring, 0);
         r <= std::min<std::int64_t>(cy + ring, rows_ - 1); ++r) {
      const bool edge_row = r == cy - ring || r == cy + ring;
      for (std::int64_t c = std::max<std::int64_t>(cx - ring, 0);
           c <= std::min<std::int64_t>(cx + ring, cols_ - 1); ++c) {
        if (!edge_row && c != cx - ring && c != cx + ring) continue;
        for (std::uint32_t i : cells_[static_cast<std::size_t>(r * cols_ + c)]) fn(i);
      }
    }
    if (!fn.keep_going(static_cast<double>(ring) * cell_)) return;
  }
}

namespace {

struct NearestScan {
  const std::vector<JunctionSite>& sites;
  const geo::PlanePoint& p;
  std::optional<JunctionDistance> best;

  void operator()(std::uint32_t i) {
    const double d = geo::distance(p, sites[i].xy);
    if (!best || d < best->distance_m || (d == best->distance_m && sites[i].node < best->site->node)) {
      best = JunctionDistance{&sites[i], d};
    }
  }
  bool keep_going(double inner_radius) const { return !(best && best->distance_m < inner_radius); }
};

struct RadiusScan {
  const std::vector<JunctionSite>& sites;
  const geo::PlanePoint& p;
  double radius;
  std::vector<JunctionDistance> found;

  void operator()(std::uint32_t i) {
    const double d = geo::distance(p, sites[i].xy);
    if (d <= radius) found.push_back({&sites[i], d});
  }
  bool keep_going(double inner_radius) const { return inner_radius <= radius; }
};

}  // namespace

std::optional<JunctionDistance> JunctionLocator::nearest(const geo::PlanePoint& p) const {
  if (sites_.empty()) return std::nullopt;
  NearestScan scan{sites_, p, std::nullopt};
  scan_rings(p, scan);
  return scan.best;
}

std::vector<JunctionDistance> JunctionLocator::within(const geo::PlanePoint& p, double radius_m) const {
  if (sites_.empty()) return {};
  RadiusScan scan{sites_, p, radius_m, {}};
  scan_rings(p, scan);
  std::sort(scan.found.begin(), scan.found.end(),
            [](const JunctionDistance& a, const JunctionDistance& b) { return a.site->node < b.site->node; });
  return scan.found;
}

// ---------------------------------------------------------------------------
// Rules

IntersectionClass classify_intersection(double distance_m, const ThresholdConfig& cfg) {
  if (distance_m <= cfg.inter_pos_max_m) return IntersectionClass::kPositive;
  if (distance_m >= cfg.inter_neg_min_m) return IntersectionClass::kNegative;
  return IntersectionClass::kAmbiguous;
}

bool is_driveable(double crop_heading_deg, const std::vector<double>& road_headings, double tol_deg) {
  return std::any_of(road_headings.begin(), road_headings.end(), [&](double h) {
    return std::abs(geo::angdiff(crop_heading_deg, h)) <= tol_deg;
  });
}

std::vector<double> true_road_headings(const match::MatchResult& m, const LabelContext& ctx) {
  std::vector<double> out{
      osm::way_tangent(ctx.net, m.way_id, m.segment_index, osm::Sense::kForward),
      osm::way_tangent(ctx.net, m.way_id, m.segment_index, osm::Sense::kBackward)};
  for (const auto& jd : ctx.junctions.within(m.position, ctx.cfg.inter_pos_max_m)) {
    out.insert(out.end(), jd.site->arm_headings.begin(), jd.site->arm_headings.end());
  }
  return out;
}

std::optional<bool> classify_wrong_way(double crop_heading_deg, double forward_deg, double tol_deg) {
  if (std::abs(geo::angdiff(crop_heading_deg, forward_deg)) <= tol_deg) return false;
  if (std::abs(geo::angdiff(crop_heading_deg, forward_deg + 180.0)) <= tol_deg) return true;
  return std::nullopt;
}

std::optional<bool> bike_lane_status(const osm::OsmWay& way, osm::Sense travel_sense,
                                     Handedness handedness) {
  // The curb side of travel is the way's right side when travelling in node
  // order under right-hand traffic; each flip swaps it.
  const bool way_right = (travel_sense == osm::Sense::kForward) == (handedness == Handedness::kRight);
  std::optional<std::string_view> v = way.tag(way_right ? "cycleway:right" : "cycleway:left");
  if (!v) v = way.tag("cycleway:both");
  if (!v) v = way.tag("cycleway");
  if (!v || *v == "no") return false;
  if (*v == "lane") return true;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_plain_number(std::string_view s) {
  if (s.empty() || !(std::isdigit(static_cast<unsigned char>(s.front())))) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v) || v <= 0.0) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

std::optional<double> parse_maxspeed(std::string_view text) {
  const std::string_view s = trim(text);
  for (std::string_view unit : {"mph", "km/h", "kmh", "kph"}) {
    if (s.size() > unit.size() && s.substr(s.size() - unit.size()) == unit) {
      auto v = parse_plain_number(trim(s.substr(0, s.size() - unit.size())));
      if (!v) return std::nullopt;
      return unit == "mph" ? *v : *v * kMphPerKmh;
    }
  }
  if (auto v = parse_plain_number(s)) return *v * kMphPerKmh;
  return std::nullopt;
}

std::optional<std::int64_t> parse_lanes(std::string_view text) {
  const std::string_view s = trim(text);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || v < 1) return std::nullopt;
  return v;
}

double quantize_heading(double deg) {
  const double q = quantize6(geo::wrap360(deg));
  return q >= 360.0 ? 0.0 : q;
}

// ---------------------------------------------------------------------------
// Labelers

namespace {

LabeledSample make_sample(const pano::PanoMeta& pano, const match::MatchResult& m,
                          const LabelContext& ctx, Task task, double heading_deg,
                          AttributeLabel label, std::size_t ordinal = 0) {
  LabeledSample s;
  s.crop.pano_id = pano.pano_id;
  s.crop.heading_deg = quantize_heading(heading_deg);
  s.crop.fov_deg = ctx.cfg.crop_fov_deg;
  s.crop.width_px = ctx.cfg.crop_px;
  s.crop.height_px = ctx.cfg.crop_px;
  s.sample_id = make_sample_id(pano.pano_id, task, s.crop.heading_deg, ordinal);
  s.label = std::move(label);
  s.way_id = m.way_id;
  s.provenance = fmt::format("way={} seg={} d={:.2f} fwd={:.1f}", m.way_id, m.segment_index,
                             m.distance_m, m.forward_heading_deg);
  return s;
}

bool enabled(const LabelContext& ctx, Task t) { return ctx.options.tasks.contains(t); }

// Crop heading for a positive intersection: toward the junction, or along the
// road when the pano sits exactly on the junction node.
double toward(const geo::PlanePoint& from, const geo::PlanePoint& to, double fallback) {
  return from == to ? fallback : geo::bearing(from, to);
}

}  // namespace

std::optional<LabeledSample> label_intersection(const pano::PanoMeta& pano, const match::MatchResult& m,
                                                const LabelContext& ctx) {
  const auto nearest = ctx.junctions.nearest(m.position);
  if (!nearest) {
    return make_sample(pano, m, ctx, Task::kIntersection, m.forward_heading_deg,
                       AttributeLabel::binary(Task::kIntersection, false));
  }
  switch (classify_intersection(nearest->distance_m, ctx.cfg)) {
    case IntersectionClass::kPositive:
      return make_sample(pano, m, ctx, Task::kIntersection,
                         toward(m.position, nearest->site->xy, m.forward_heading_deg),
                         AttributeLabel::binary(Task::kIntersection, true));
    case IntersectionClass::kNegative:
      return make_sample(pano, m, ctx, Task::kIntersection, m.forward_heading_deg,
                         AttributeLabel::binary(Task::kIntersection, false));
    case IntersectionClass::kAmbiguous:
      break;
  }
  return std::nullopt;
}

std::optional<LabeledSample> label_intersection_distance(const pano::PanoMeta& pano,
                                                         const match::MatchResult& m,
                                                         const LabelContext& ctx) {
  const auto nearest = ctx.junctions.nearest(m.position);
  if (!nearest || classify_intersection(nearest->distance_m, ctx.cfg) != IntersectionClass::kPositive) {
    return std::nullopt;
  }
  const double d = quantize6(nearest->distance_m);
  if (!(d > 0.0)) return std::nullopt;
  return make_sample(pano, m, ctx, Task::kIntersectionDistance,
                     toward(m.position, nearest->site->xy, m.forward_heading_deg),
                     AttributeLabel::real(Task::kIntersectionDistance, d));
}

std::vector<LabeledSample> label_driveable(const pano::PanoMeta& pano, const match::MatchResult& m,
                                           const LabelContext& ctx) {
  const auto roads = true_road_headings(m, ctx);
  Rng rng = Rng::stream(ctx.seed, pano.pano_id, to_string(Task::kDriveable));
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < ctx.options.driveable_headings; ++i) {
    const double h = quantize_heading(rng.uniform(0.0, 360.0));
    out.push_back(make_sample(pano, m, ctx, Task::kDriveable, h,
                              AttributeLabel::binary(Task::kDriveable,
                                                     is_driveable(h, roads, ctx.cfg.driveable_tol_deg)),
                              i));
  }
  return out;
}

std::optional<LabeledSample> heading_angle_sample(const pano::PanoMeta& pano, const match::MatchResult& m,
                                                  const LabelContext& ctx, double offset_deg,
                                                  std::size_t ordinal) {
  const auto nearest = ctx.junctions.nearest(m.position);
  if (nearest && nearest->distance_m < ctx.cfg.heading_excl_m) return std::nullopt;
  const double offset = quantize6(offset_deg);
  if (!(std::abs(offset) <= ctx.cfg.heading_max_offset_deg)) return std::nullopt;
  return make_sample(pano, m, ctx, Task::kHeadingAngle, m.forward_heading_deg + offset,
                     AttributeLabel::real(Task::kHeadingAngle, offset), ordinal);
}

std::vector<LabeledSample> label_heading_angle(const pano::PanoMeta& pano, const match::MatchResult& m,
                                               const LabelContext& ctx) {
  Rng rng = Rng::stream(ctx.seed, pano.pano_id, to_string(Task::kHeadingAngle));
  std::vector<LabeledSample> out;
  const double lim = ctx.cfg.heading_max_offset_deg;
  for (std::size_t i = 0; i < ctx.options.repeat; ++i) {
    if (auto s = heading_angle_sample(pano, m, ctx, rng.uniform(-lim, lim), i)) out.push_back(std::move(*s));
  }
  return out;
}

std::optional<LabeledSample> label_bike_lane(const pano::PanoMeta& pano, const match::MatchResult& m,
                                             const LabelContext& ctx) {
  const auto status =
      bike_lane_status(ctx.net.network().way(m.way_id), m.forward_sense, ctx.options.handedness);
  if (!status) return std::nullopt;
  const double sign = ctx.options.handedness == Handedness::kRight ? 1.0 : -1.0;
  return make_sample(pano, m, ctx, Task::kBikeLane,
                     m.forward_heading_deg + sign * ctx.cfg.bike_crop_offset_deg,
                     AttributeLabel::binary(Task::kBikeLane, *status));
}

std::optional<LabeledSample> label_speed_limit(const pano::PanoMeta& pano, const match::MatchResult& m,
                                               const LabelContext& ctx) {
  const auto tag = ctx.net.network().way(m.way_id).tag("maxspeed");
  if (!tag) return std::nullopt;
  const auto mph = parse_maxspeed(*tag);
  if (!mph) return std::nullopt;
  return make_sample(pano, m, ctx, Task::kSpeedLimit, m.forward_heading_deg,
                     AttributeLabel::real(Task::kSpeedLimit, quantize6(*mph)));
}

LabeledSample label_one_way(const pano::PanoMeta& pano, const match::MatchResult& m,
                            const LabelContext& ctx) {
  const bool one_way =
      osm::travel_directions(ctx.net.network().way(m.way_id)) != osm::TravelDirections::kBoth;
  return make_sample(pano, m, ctx, Task::kOneWay, m.forward_heading_deg,
                     AttributeLabel::binary(Task::kOneWay, one_way));
}

std::vector<LabeledSample> label_wrong_way(const pano::PanoMeta& pano, const match::MatchResult& m,
                                           const LabelContext& ctx) {
  Rng rng = Rng::stream(ctx.seed, pano.pano_id, to_string(Task::kWrongWay));
  const double tol = ctx.cfg.wrongway_tol_deg;
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < ctx.options.repeat; ++i) {
    const double right = m.forward_heading_deg + rng.uniform(-tol, tol);
    const double wrong = m.forward_heading_deg + 180.0 + rng.uniform(-tol, tol);
    out.push_back(make_sample(pano, m, ctx, Task::kWrongWay, right,
                              AttributeLabel::binary(Task::kWrongWay, false), 2 * i));
    out.push_back(make_sample(pano, m, ctx, Task::kWrongWay, wrong,
                              AttributeLabel::binary(Task::kWrongWay, true), 2 * i + 1));
  }
  return out;
}

std::optional<LabeledSample> label_num_lanes(const pano::PanoMeta& pano, const match::MatchResult& m,
                                             const LabelContext& ctx) {
  const osm::OsmWay& way = ctx.net.network().way(m.way_id);
  if (osm::travel_directions(way) == osm::TravelDirections::kBoth) return std::nullopt;
  const auto tag = way.tag("lanes");
  if (!tag) return std::nullopt;
  const auto lanes = parse_lanes(*tag);
  if (!lanes) return std::nullopt;
  return make_sample(pano, m, ctx, Task::kNumLanes, m.forward_heading_deg,
                     AttributeLabel::integer(Task::kNumLanes, *lanes));
}

std::vector<LabeledSample> label_pano(const pano::PanoMeta& pano, const match::MatchResult& m,
                                      const LabelContext& ctx) {
  std::vector<LabeledSample> out;
  if (!(m.distance_m <= ctx.cfg.offroad_max_m)) return out;
  auto add = [&](std::optional<LabeledSample> s) {
    if (s) out.push_back(std::move(*s));
  };
  auto add_all = [&](std::vector<LabeledSample> v) {
    for (auto& s : v) out.push_back(std::move(s));
  };
  if (enabled(ctx, Task::kIntersection)) add(label_intersection(pano, m, ctx));
  if (enabled(ctx, Task::kIntersectionDistance)) add(label_intersection_distance(pano, m, ctx));
  if (enabled(ctx, Task::kDriveable)) add_all(label_driveable(pano, m, ctx));
  if (enabled(ctx, Task::kHeadingAngle)) add_all(label_heading_angle(pano, m, ctx));
  if (enabled(ctx, Task::kBikeLane)) add(label_bike_lane(pano, m, ctx));
  if (enabled(ctx, Task::kSpeedLimit)) add(label_speed_limit(pano, m, ctx));
  if (enabled(ctx, Task::kOneWay)) out.push_back(label_one_way(pano, m, ctx));
  if (enabled(ctx, Task::kWrongWay)) add_all(label_wrong_way(pano, m, ctx));
  if (enabled(ctx, Task::kNumLanes)) add(label_num_lanes(pano, m, ctx));
  return out;
}

}  // namespace streetlabel::labelgen
