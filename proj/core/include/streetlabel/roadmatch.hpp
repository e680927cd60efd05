#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streetlabel/config.hpp"
#include "streetlabel/diagnostics.hpp"
#include "streetlabel/geo.hpp"
#include "streetlabel/osm.hpp"
#include "streetlabel/panograph.hpp"

namespace streetlabel::match {

struct SegmentHit {
  osm::WayId way = 0;
  std::size_t segment = 0;
  geo::SegmentProjection projection;
};

/// Strict ordering used to pick between equally distant segments: smaller
/// distance, then smaller way id, then smaller segment index.
bool closer(const SegmentHit& a, const SegmentHit& b);

/// Uniform grid over the projected bounding box of all road segments. Each
/// segment is listed in every cell its bounding box overlaps. Immutable after
/// build; nearest() is safe to call concurrently.
class SpatialIndex {
 public:
  static constexpr double kDefaultCellSizeM = 50.0;

  /// Throws DataError for a network without segments.
  static SpatialIndex build(const osm::ProjectedNetwork& net, double cell_size_m = kDefaultCellSizeM);

  /// Globally nearest segment. Rings of cells are searched outward from the
  /// query cell until the best distance is below the inner radius of the next
  /// unvisited ring, so the answer equals an exhaustive scan.
  SegmentHit nearest(const geo::PlanePoint& p) const;

  double cell_size_m() const { return cell_; }
  std::size_t cols() const { return cols_; }
  std::size_t rows() const { return rows_; }
  std::size_t segment_count() const { return segments_.size(); }
  /// (way, segment) pairs registered in cell (col, row).
  std::vector<std::pair<osm::WayId, std::size_t>> cell_contents(std::size_t col, std::size_t row) const;
  /// Cell containing `p`, which may lie outside the grid.
  std::pair<std::int64_t, std::int64_t> cell_of(const geo::PlanePoint& p) const;

 private:
  struct Segment {
    geo::PlanePoint a;
    geo::PlanePoint b;
    osm::WayId way;
    std::uint32_t index;
  };

  double cell_ = kDefaultCellSizeM;
  geo::PlanePoint origin_;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<Segment> segments_;
  // CSR layout: items of cell c are cell_items_[cell_start_[c] .. cell_start_[c + 1]).
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> cell_items_;
};

enum class Side { kLeft, kRight };

std::string_view to_string(Side s);

struct MatchResult {
  std::string pano_id;
  osm::WayId way_id = 0;
  std::size_t segment_index = 0;
  double distance_m = 0.0;
  geo::PlanePoint closest;
  /// Pano position in the plane of the projector used for matching.
  geo::PlanePoint position;
  /// Direction of travel at the pano; node-order forward until
  /// forward_heading() resolves it.
  double forward_heading_deg = 0.0;
  osm::Sense forward_sense = osm::Sense::kForward;
  /// Which side of the forward direction the pano lies on. A pano exactly on
  /// the road reports kLeft.
  Side side = Side::kLeft;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Nearest road segment for one panorama. Throws DataError for an empty index.
MatchResult nearest_way(const SpatialIndex& index, const osm::ProjectedNetwork& net,
                        const pano::PanoMeta& pano);

struct OffroadSplit {
  std::vector<MatchResult> kept;
  std::vector<MatchResult> rejected;
};

/// Keeps matches with distance_m <= cfg.offroad_max_m.
OffroadSplit filter_offroad(std::vector<MatchResult> matches, const ThresholdConfig& cfg);

/// Resolves the travel direction at the pano and stores it (heading, sense,
/// side) into `m`. One-way roads follow their oneway tag; two-way roads take
/// the tangent sense nearer to the capture azimuth, node order winning exact
/// ties. A one-way road whose direction disagrees with the azimuth by more
/// than 90 degrees keeps the tagged direction and records an
/// "oneway_azimuth_mismatch" warning.
double forward_heading(MatchResult& m, const osm::ProjectedNetwork& net, const pano::PanoMeta& pano,
                       Diagnostics* diag = nullptr);

}  // namespace streetlabel::match
