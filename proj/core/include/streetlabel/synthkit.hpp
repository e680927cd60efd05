#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streetlabel/config.hpp"
#include "streetlabel/geo.hpp"
#include "streetlabel/image.hpp"
#include "streetlabel/labelgen.hpp"
#include "streetlabel/labels.hpp"
#include "streetlabel/osm.hpp"
#include "streetlabel/panograph.hpp"

namespace streetlabel::synth {

/// A maxspeed tag and the limit it denotes.
struct SpeedChoice {
  std::string tag;
  double mph = 0.0;
};

/// A lanes tag and the count it denotes (empty for unusable values).
struct LaneChoice {
  std::string tag;
  std::optional<std::int64_t> lanes;
};

struct CityParams {
  /// East-west streets (rows) and north-south streets (cols); they cross at
  /// rows * cols intersections.
  std::size_t rows = 4;
  std::size_t cols = 4;
  double block_m = 100.0;
  /// Dead-end extension of every street beyond the outermost crossing.
  /// With stubs every crossing has four arms.
  double stub_m = 50.0;
  double oneway_fraction = 0.35;
  /// Chance that a way carries a maxspeed tag, drawn from speed_palette.
  double speed_tag_fraction = 0.7;
  std::vector<SpeedChoice> speed_palette = {
      {"25 mph", 25.0}, {"30 mph", 30.0}, {"35 mph", 35.0}, {"50", 31.06855}, {"80", 49.70968}};
  double lanes_tag_fraction = 0.7;
  std::vector<LaneChoice> lane_palette = {{"1", 1}, {"2", 2}, {"3", 3}, {"2;3", std::nullopt}};
  double bike_fraction = 0.3;
  /// Blocks that get a footway (filtered out as non-road).
  double footway_fraction = 0.2;
  /// Street edges split into two ways mid-block.
  double split_fraction = 0.25;
  /// Adds an avenue along the main diagonal through crossings (k, k),
  /// creating 5- and 6-arm junctions. Needs rows == cols.
  bool diagonal = false;
  geo::GeoPoint origin{37.7749, -122.4194};
  std::uint64_t seed = 1;

  void validate() const;
};

enum class BikeTruth { kPositive, kNegative, kNone };

struct WayTruth {
  osm::WayId id = 0;
  std::string highway;
  bool road = true;
  osm::TravelDirections directions = osm::TravelDirections::kBoth;
  std::optional<double> speed_mph;
  std::optional<std::int64_t> lanes;
  BikeTruth bike = BikeTruth::kNone;
  /// Heading of every segment walked in node order (ways are straight).
  double forward_bearing_deg = 0.0;
  std::vector<osm::NodeId> node_ids;
};

struct JunctionTruth {
  osm::NodeId node = 0;
  geo::PlanePoint xy;
  std::vector<double> arm_headings;
};

struct CityTruth {
  geo::GeoPoint origin;
  std::size_t node_count = 0;
  std::size_t way_count = 0;
  std::size_t road_way_count = 0;
  std::size_t footway_count = 0;
  std::size_t split_nodes = 0;
  std::size_t segment_count = 0;  ///< road segments only
  std::map<osm::WayId, WayTruth> ways;
  /// Nodes with three or more road arms, by node id.
  std::vector<JunctionTruth> junctions;
  std::map<osm::NodeId, geo::PlanePoint> node_xy;
};

struct City {
  std::string osm_xml;
  CityTruth truth;
};

/// Seeded grid city. Same params, same bytes.
City gen_city(const CityParams& params);

struct PanoParams {
  double spacing_m = 10.0;
  /// Distance kept from both ends of every street edge.
  double end_margin_m = 8.0;
  /// Offset to the right of the direction of travel.
  double lateral_offset_m = 3.0;
  /// Uniform positional noise per axis, meters.
  double noise_m = 0.0;
  /// Uniform azimuth noise, degrees.
  double azimuth_noise_deg = 5.0;
  /// Block centres that get an off-road ("plaza") panorama.
  double plaza_fraction = 0.2;
  /// Panos of different drive passes closer than this are linked.
  double link_radius_m = 25.0;
  std::uint64_t seed = 2;
};

struct PanoTruth {
  std::string pano_id;
  geo::PlanePoint xy;
  bool offroad = false;
  osm::WayId way = 0;
  double distance_m = 0.0;
  double forward_heading_deg = 0.0;
  osm::Sense travel_sense = osm::Sense::kForward;
  std::optional<osm::NodeId> junction;
  double junction_distance_m = 0.0;
  double junction_bearing_deg = 0.0;
  /// Road headings a crop at this pano counts as driveable toward.
  std::vector<double> driveable_headings;
};

struct PanoSet {
  std::vector<pano::PanoMeta> panos;
  std::map<std::string, PanoTruth> truth;
  /// Candidates dropped because another road was as close as their own.
  std::size_t dropped_ambiguous = 0;
};

/// Drive passes along every street in each permitted direction, one pano
/// every spacing_m, plus off-road panos at some block centres.
/// `junction_radius_m` is the radius inside which a junction's arms count as
/// driveable headings (the pipeline's inter_pos_max_m).
PanoSet gen_panos(const City& city, const PanoParams& params, double junction_radius_m = 30.0);

inline constexpr Rgb kSky{135, 190, 235};
inline constexpr Rgb kGround{96, 112, 72};
inline constexpr Rgb kRoad{128, 128, 128};
inline constexpr Rgb kJunctionStripe{220, 30, 30};
inline constexpr Rgb kBikeLaneBand{30, 60, 220};
inline constexpr Rgb kNoBikeLaneBand{230, 210, 40};
inline constexpr double kStripeHalfWidthDeg = 0.6;
inline constexpr double kBikeBandHalfWidthDeg = 5.0;

/// 832x416 schematic equirectangular panorama in the unwarp convention:
/// sky above the horizon, ground below, gray road wedges of +-tol around every
/// driveable heading, a red full-height stripe toward the nearest junction,
/// and a bike-lane band (blue lane, yellow none) at the curb-side crop
/// heading in the bottom quarter.
Image render_pano(const pano::PanoMeta& meta, const PanoTruth& truth, const CityTruth& city,
                  double driveable_tol_deg = 22.5, double bike_offset_deg = 45.0,
                  std::size_t width = pano::kPanoWidth, std::size_t height = pano::kPanoHeight);

struct VerifyReport {
  std::size_t checked = 0;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

/// Checks emitted samples against ground truth: every sample's label and
/// crop heading, and that exactly the expected (pano, task) samples exist.
VerifyReport verify_labels(const std::vector<LabeledSample>& samples, const CityTruth& city,
                           const PanoSet& panos, const ThresholdConfig& cfg,
                           const labelgen::LabelOptions& options);

/// JSON round trip of the ground truth, for fixtures written by the CLI.
std::string truth_to_json(const CityTruth& city, const PanoSet& panos);
void truth_from_json(const std::string& text, CityTruth& city, PanoSet& panos);

}  // namespace streetlabel::synth
