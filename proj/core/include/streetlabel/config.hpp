#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace streetlabel {

/// Every numeric constant of the labeling pipeline in one place. Field names
/// double as CLI flag names (underscores become dashes) and manifest header
/// keys.
struct ThresholdConfig {
  /// Panoramas farther than this from every road are dropped (inclusive keep).
  double offroad_max_m = 10.5;
  /// Nearest junction at or below this distance: intersection positive.
  double inter_pos_max_m = 30.0;
  /// Nearest junction at or above this distance: intersection negative.
  double inter_neg_min_m = 100.0;
  double driveable_tol_deg = 22.5;
  double heading_max_offset_deg = 60.0;
  /// Heading-angle crops need the nearest junction at least this far away.
  double heading_excl_m = 30.0;
  double bike_crop_offset_deg = 45.0;
  double wrongway_tol_deg = 22.5;
  double crop_fov_deg = 100.0;
  int crop_px = 227;
  double train_fraction = 0.8;

  /// Throws ValidationError when a value is non-positive, out of range, or
  /// inter_neg_min_m <= inter_pos_max_m.
  void validate() const;

  friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;
};

struct ThresholdField {
  std::string_view name;
  std::string_view help;
  double ThresholdConfig::*real = nullptr;
  int ThresholdConfig::*integer = nullptr;
};

/// Reflection table over ThresholdConfig, in declaration order.
const std::vector<ThresholdField>& threshold_fields();

double get(const ThresholdConfig& cfg, const ThresholdField& f);
void set(ThresholdConfig& cfg, const ThresholdField& f, double value);

enum class Handedness { kRight, kLeft };

std::string_view to_string(Handedness h);
Handedness parse_handedness(std::string_view s);

}  // namespace streetlabel
