#include "streetlabel/roadmatch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "streetlabel/error.hpp"

namespace streetlabel::match {

bool closer(const SegmentHit& a, const SegmentHit& b) {
  if (a.projection.dist_m != b.projection.dist_m) return a.projection.dist_m < b.projection.dist_m;
  if (a.way != b.way) return a.way < b.way;
  return a.segment < b.segment;
}

SpatialIndex SpatialIndex::build(const osm::ProjectedNetwork& net, double cell_size_m) {
  if (!(cell_size_m > 0.0) || !std::isfinite(cell_size_m)) {
    throw ValidationError("cell size must be positive");
  }
  SpatialIndex idx;
  idx.cell_ = cell_size_m;
  for (const auto& [id, way] : net.network().ways()) {
    for (std::size_t i = 0; i + 1 < way.node_ids.size(); ++i) {
      idx.segments_.push_back({net.xy(way.node_ids[i]), net.xy(way.node_ids[i + 1]), id,
                               static_cast<std::uint32_t>(i)});
    }
  }
  if (idx.segments_.empty()) throw DataError("cannot index an empty road network");

  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& s : idx.segments_) {
    min_x = std::min({min_x, s.a.x_m, s.b.x_m});
    min_y = std::min({min_y, s.a.y_m, s.b.y_m});
    max_x = std::max({max_x, s.a.x_m, s.b.x_m});
    max_y = std::max({max_y, s.a.y_m, s.b.y_m});
  }
  idx.origin_ = {min_x, min_y};
  idx.cols_ = static_cast<std::size_t>(std::floor((max_x - min_x) / cell_size_m)) + 1;
  idx.rows_ = static_cast<std::size_t>(std::floor((max_y - min_y) / cell_size_m)) + 1;

  auto cell_range = [&](const Segment& s) {
    auto clampc = [](double v, std::size_t n) {
      return std::min(static_cast<std::size_t>(std::max(0.0, std::floor(v))), n - 1);
    };
    const std::size_t c0 = clampc((std::min(s.a.x_m, s.b.x_m) - min_x) / cell_size_m, idx.cols_);
    const std::size_t c1 = clampc((std::max(s.a.x_m, s.b.x_m) - min_x) / cell_size_m, idx.cols_);
    const std::size_t r0 = clampc((std::min(s.a.y_m, s.b.y_m) - min_y) / cell_size_m, idx.rows_);
    const std::size_t r1 = clampc((std::max(s.a.y_m, s.b.y_m) - min_y) / cell_size_m, idx.rows_);
    return std::array<std::size_t, 4>{c0, c1, r0, r1};
  };

  // Two passes: count, then fill.
  const std::size_t n_cells = idx.cols_ * idx.rows_;
  std::vector<std::uint32_t> counts(n_cells + 1, 0);
  for (const auto& s : idx.segments_) {
    const auto [c0, c1, r0, r1] = cell_range(s);
    for (std::size_t r = r0; r <= r1; ++r) {
      for (std::size_t c = c0; c <= c1; ++c) ++counts[r * idx.cols_ + c + 1];
    }
  }
  for (std::size_t i = 1; i <= n_cells; ++i) counts[i] += counts[i - 1];
  idx.cell_start_ = counts;
  idx.cell_items_.resize(counts[n_cells]);
  for (std::uint32_t si = 0; si < idx.segments_.size(); ++si) {
    const auto [c0, c1, r0, r1] = cell_range(idx.segments_[si]);
    for (std::size_t r = r0; r <= r1; ++r) {
      for (std::size_t c = c0; c <= c1; ++c) idx.cell_items_[counts[r * idx.cols_ + c]++] = si;
    }
  }
  return idx;
}

std::pair<std::int64_t, std::int64_t> SpatialIndex::cell_of(const geo::PlanePoint& p) const {
  // Clamp far outliers so the conversion cannot overflow.
  constexpr double kLimit = 1e15;
  const double cx = std::clamp(std::floor((p.x_m - origin_.x_m) / cell_), -kLimit, kLimit);
  const double cy = std::clamp(std::floor((p.y_m - origin_.y_m) / cell_), -kLimit, kLimit);
  return {static_cast<std::int64_t>(cx), static_cast<std::int64_t>(cy)};
}

std::vector<std::pair<osm::WayId, std::size_t>> SpatialIndex::cell_contents(std::size_t col,
                                                                             std::size_t row) const {
  std::vector<std::pair<osm::WayId, std::size_t>> out;
  if (col >= cols_ || row >= rows_) return out;
  const std::size_t c = row * cols_ + col;
  for (std::uint32_t i = cell_start_[c]; i < cell_start_[c + 1]; ++i) {
    const auto& s = segments_[cell_items_[i]];
    out.emplace_back(s.way, s.index);
  }
  return out;
}

SegmentHit SpatialIndex::nearest(const geo::PlanePoint& p) const {
  if (segments_.empty()) throw DataError("nearest() on an empty index");
  const auto [cx, cy] = cell_of(p);
  const auto cols = static_cast<std::int64_t>(cols_);
  const auto rows = static_cast<std::int64_t>(rows_);

  auto outside = [](std::int64_t v, std::int64_t n) -> std::int64_t {
    return v < 0 ? -v : (v >= n ? v - n + 1 : 0);
  };
  const std::int64_t r_start = std::max(outside(cx, cols), outside(cy, rows));
  const std::int64_t r_end = std::max({cx, cols - 1 - cx, cy, rows - 1 - cy});

  std::optional<SegmentHit> best;
  auto visit = [&](std::int64_t c, std::int64_t r) {
    const auto cell = static_cast<std::size_t>(r * cols + c);
    for (std::uint32_t i = cell_start_[cell]; i < cell_start_[cell + 1]; ++i) {
      const Segment& s = segments_[cell_items_[i]];
      SegmentHit hit{s.way, s.index, geo::point_segment_distance(p, s.a, s.b)};
      if (!best || closer(hit, *best)) best = hit;
    }
  };

  for (std::int64_t ring = r_start; ring <= r_end; ++ring) {
    const std::int64_t r_lo = std::max<std::int64_t>(cy - ring, 0);
    const std::int64_t r_hi = std::min<std::int64_t>(cy + ring, rows - 1);
    for (std::int64_t r = r_lo; r <= r_hi; ++r) {
      if (r == cy - ring || r == cy + ring) {
        const std::int64_t c_lo = std::max<std::int64_t>(cx - ring, 0);
        const std::int64_t c_hi = std::min<std::int64_t>(cx + ring, cols - 1);
        for (std::int64_t c = c_lo; c <= c_hi; ++c) visit(c, r);
      } else {
        if (cx - ring >= 0 && cx - ring < cols) visit(cx - ring, r);
        if (ring > 0 && cx + ring >= 0 && cx + ring < cols) visit(cx + ring, r);
      }
    }
    // Any segment not seen yet lies wholly in rings > `ring`, at least
    // ring * cell away from p.
    if (best && best->projection.dist_m < static_cast<double>(ring) * cell_) break;
  }
  return *best;
}

std::string_view to_string(Side s) { return s == Side::kLeft ? "left" : "right"; }

namespace {

Side side_of(const geo::PlanePoint& pos, const geo::PlanePoint& closest, double heading_deg) {
  const geo::PlanePoint dir = geo::heading_vector(heading_deg);
  const double vx = pos.x_m - closest.x_m;
  const double vy = pos.y_m - closest.y_m;
  const double cross = dir.x_m * vy - dir.y_m * vx;
  return cross < 0.0 ? Side::kRight : Side::kLeft;
}

}  // namespace

MatchResult nearest_way(const SpatialIndex& index, const osm::ProjectedNetwork& net,
                        const pano::PanoMeta& pano) {
  MatchResult m;
  m.pano_id = pano.pano_id;
  m.position = net.projector().project(pano.loc);
  const SegmentHit hit = index.nearest(m.position);
  m.way_id = hit.way;
  m.segment_index = hit.segment;
  m.distance_m = hit.projection.dist_m;
  m.closest = hit.projection.closest;
  m.forward_sense = osm::Sense::kForward;
  m.forward_heading_deg = osm::way_tangent(net, m.way_id, m.segment_index, osm::Sense::kForward);
  m.side = side_of(m.position, m.closest, m.forward_heading_deg);
  return m;
}

OffroadSplit filter_offroad(std::vector<MatchResult> matches, const ThresholdConfig& cfg) {
  OffroadSplit out;
  for (auto& m : matches) {
    (m.distance_m <= cfg.offroad_max_m ? out.kept : out.rejected).push_back(std::move(m));
  }
  return out;
}

double forward_heading(MatchResult& m, const osm::ProjectedNetwork& net, const pano::PanoMeta& pano,
                       Diagnostics* diag) {
  const osm::OsmWay& way = net.network().way(m.way_id);
  const double fwd = osm::way_tangent(net, m.way_id, m.segment_index, osm::Sense::kForward);
  const double bwd = osm::way_tangent(net, m.way_id, m.segment_index, osm::Sense::kBackward);

  switch (osm::travel_directions(way, diag)) {
    case osm::TravelDirections::kForwardOnly:
      m.forward_sense = osm::Sense::kForward;
      break;
    case osm::TravelDirections::kBackwardOnly:
      m.forward_sense = osm::Sense::kBackward;
      break;
    case osm::TravelDirections::kBoth:
      m.forward_sense = std::abs(geo::angdiff(fwd, pano.azimuth_deg)) <=
                                std::abs(geo::angdiff(bwd, pano.azimuth_deg))
                            ? osm::Sense::kForward
                            : osm::Sense::kBackward;
      break;
  }
  m.forward_heading_deg = m.forward_sense == osm::Sense::kForward ? fwd : bwd;

  if (diag != nullptr && osm::travel_directions(way) != osm::TravelDirections::kBoth &&
      std::abs(geo::angdiff(m.forward_heading_deg, pano.azimuth_deg)) > 90.0) {
    diag->warn("oneway_azimuth_mismatch",
               "pano " + m.pano_id + " faces against one-way way " + std::to_string(m.way_id));
  }
  m.side = side_of(m.position, m.closest, m.forward_heading_deg);
  return m.forward_heading_deg;
}

}  // namespace streetlabel::match
