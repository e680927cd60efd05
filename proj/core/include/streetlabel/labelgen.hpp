#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "streetlabel/config.hpp"
#include "streetlabel/diagnostics.hpp"
#include "streetlabel/labels.hpp"
#include "streetlabel/osm.hpp"
#include "streetlabel/panograph.hpp"
#include "streetlabel/roadmatch.hpp"

namespace streetlabel::labelgen {

struct JunctionSite {
  osm::NodeId node = 0;
  geo::PlanePoint xy;
  std::vector<double> arm_headings;
};

struct JunctionDistance {
  const JunctionSite* site = nullptr;
  double distance_m = 0.0;
};

/// Nearest-junction queries over a grid bucketed copy of the junction list.
class JunctionLocator {
 public:
  JunctionLocator(const std::vector<osm::Junction>& junctions, const geo::Projector& proj,
                  double cell_size_m = 100.0);

  bool empty() const { return sites_.empty(); }
  std::size_t size() const { return sites_.size(); }
  /// Nearest junction by straight-line distance; ties go to the smaller node id.
  std::optional<JunctionDistance> nearest(const geo::PlanePoint& p) const;
  /// All junctions with distance <= radius, ordered by node id.
  std::vector<JunctionDistance> within(const geo::PlanePoint& p, double radius_m) const;

 private:
  template <typename Fn>
  void scan_rings(const geo::PlanePoint& p, Fn&& fn) const;

  std::vector<JunctionSite> sites_;
  double cell_ = 100.0;
  double min_x_ = 0.0;
  double min_y_ = 0.0;
  std::int64_t cols_ = 0;
  std::int64_t rows_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

struct LabelOptions {
  /// Uniformly drawn driveable-heading crops per pano.
  std::size_t driveable_headings = 4;
  /// Draws per pano for the randomized tasks (heading angle, wrong way).
  std::size_t repeat = 1;
  Handedness handedness = Handedness::kRight;
  std::set<Task> tasks{kAllTasks.begin(), kAllTasks.end()};
};

/// Everything a labeler reads besides the pano and its match.
struct LabelContext {
  const osm::ProjectedNetwork& net;
  const JunctionLocator& junctions;
  ThresholdConfig cfg;
  LabelOptions options;
  std::uint64_t seed = 0;
};

// -- Rules -------------------------------------------------------------------
// Pure classification rules, shared by the labelers and exposed for boundary
// tests. All boundaries are inclusive.

enum class IntersectionClass { kPositive, kNegative, kAmbiguous };

/// d <= inter_pos_max_m positive; d >= inter_neg_min_m negative; else ambiguous.
IntersectionClass classify_intersection(double distance_m, const ThresholdConfig& cfg);

/// True when some heading in `road_headings` is within tol of `crop_heading`.
bool is_driveable(double crop_heading_deg, const std::vector<double>& road_headings, double tol_deg);

/// Both tangent senses of the matched segment plus the arm headings of every
/// junction within inter_pos_max_m of the pano.
std::vector<double> true_road_headings(const match::MatchResult& m, const LabelContext& ctx);

/// false = right way (within tol of forward), true = wrong way (within tol of
/// forward + 180), empty = neither band.
std::optional<bool> classify_wrong_way(double crop_heading_deg, double forward_deg, double tol_deg);

/// Positive for a painted lane on the curb side of travel, negative when no
/// cycleway is tagged (or "no"), empty for other values (track, shared_lane,
/// ...). Reads cycleway:right / cycleway:left relative to the travel sense,
/// falling back to cycleway.
std::optional<bool> bike_lane_status(const osm::OsmWay& way, osm::Sense travel_sense,
                                     Handedness handedness);

/// "N mph" -> N; bare number -> km/h converted to mph; "N km/h" likewise.
/// Anything else (lists, "signals", "none") -> empty.
std::optional<double> parse_maxspeed(std::string_view text);

inline constexpr double kMphPerKmh = 0.621371;

/// Lane count from a lanes tag: plain positive integer only.
std::optional<std::int64_t> parse_lanes(std::string_view text);

/// Heading folded into [0, 360) and rounded to manifest precision.
double quantize_heading(double deg);

// -- Labelers ----------------------------------------------------------------
// Every labeler takes a pano that passed filter_offroad and whose match has a
// resolved forward heading. Randomized labelers draw from a stream keyed on
// (seed, pano_id, task) so results do not depend on processing order.

std::optional<LabeledSample> label_intersection(const pano::PanoMeta& pano, const match::MatchResult& m,
                                                const LabelContext& ctx);
std::optional<LabeledSample> label_intersection_distance(const pano::PanoMeta& pano,
                                                         const match::MatchResult& m,
                                                         const LabelContext& ctx);
std::vector<LabeledSample> label_driveable(const pano::PanoMeta& pano, const match::MatchResult& m,
                                           const LabelContext& ctx);
/// Crop at forward + offset, labeled with the offset. Empty when the nearest
/// junction is closer than heading_excl_m or |offset| exceeds the maximum.
std::optional<LabeledSample> heading_angle_sample(const pano::PanoMeta& pano, const match::MatchResult& m,
                                                  const LabelContext& ctx, double offset_deg,
                                                  std::size_t ordinal = 0);
std::vector<LabeledSample> label_heading_angle(const pano::PanoMeta& pano, const match::MatchResult& m,
                                               const LabelContext& ctx);
std::optional<LabeledSample> label_bike_lane(const pano::PanoMeta& pano, const match::MatchResult& m,
                                             const LabelContext& ctx);
std::optional<LabeledSample> label_speed_limit(const pano::PanoMeta& pano, const match::MatchResult& m,
                                               const LabelContext& ctx);
LabeledSample label_one_way(const pano::PanoMeta& pano, const match::MatchResult& m,
                            const LabelContext& ctx);
std::vector<LabeledSample> label_wrong_way(const pano::PanoMeta& pano, const match::MatchResult& m,
                                           const LabelContext& ctx);
std::optional<LabeledSample> label_num_lanes(const pano::PanoMeta& pano, const match::MatchResult& m,
                                             const LabelContext& ctx);

/// All enabled tasks for one pano. Empty for a pano beyond offroad_max_m.
std::vector<LabeledSample> label_pano(const pano::PanoMeta& pano, const match::MatchResult& m,
                                      const LabelContext& ctx);

}  // namespace streetlabel::labelgen
