#include "streetlabel/config.hpp"

#include <cmath>

#include "streetlabel/error.hpp"

namespace streetlabel {

void ThresholdConfig::validate() const {
  for (const auto& f : threshold_fields()) {
    const double v = get(*this, f);
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError(std::string(f.name) + " must be positive, got " + std::to_string(v));
    }
  }
  if (inter_neg_min_m <= inter_pos_max_m) {
    throw ValidationError("inter_neg_min_m (" + std::to_string(inter_neg_min_m) +
                          ") must exceed inter_pos_max_m (" + std::to_string(inter_pos_max_m) + ")");
  }
  if (crop_fov_deg >= 180.0) throw ValidationError("crop_fov_deg must be below 180");
  if (train_fraction >= 1.0) throw ValidationError("train_fraction must be below 1");
  for (double deg : {driveable_tol_deg, wrongway_tol_deg}) {
    if (deg >= 90.0) throw ValidationError("angular tolerances must be below 90 degrees");
  }
  if (heading_max_offset_deg > 180.0) throw ValidationError("heading_max_offset_deg above 180");
}

const std::vector<ThresholdField>& threshold_fields() {
  using T = ThresholdConfig;
  static const std::vector<ThresholdField> kFields = {
      {"offroad_max_m", "max distance from pano to nearest road, meters (kept if <=)", &T::offroad_max_m},
      {"inter_pos_max_m", "intersection positive if nearest junction <= this, meters", &T::inter_pos_max_m},
      {"inter_neg_min_m", "intersection negative if nearest junction >= this, meters", &T::inter_neg_min_m},
      {"driveable_tol_deg", "crop is driveable within this angle of a road heading", &T::driveable_tol_deg},
      {"heading_max_offset_deg", "max heading-angle offset from forward, degrees", &T::heading_max_offset_deg},
      {"heading_excl_m", "heading-angle crops need the nearest junction at least this far, meters", &T::heading_excl_m},
      {"bike_crop_offset_deg", "bike-lane crop offset toward the curb side, degrees", &T::bike_crop_offset_deg},
      {"wrongway_tol_deg", "right/wrong-way crop band half-width, degrees", &T::wrongway_tol_deg},
      {"crop_fov_deg", "horizontal field of view of crops, degrees", &T::crop_fov_deg},
      {"crop_px", "crop width and height, pixels", nullptr, &T::crop_px},
      {"train_fraction", "fraction of panoramas (westmost) assigned to train", &T::train_fraction},
  };
  return kFields;
}

double get(const ThresholdConfig& cfg, const ThresholdField& f) {
  return f.real != nullptr ? cfg.*f.real : static_cast<double>(cfg.*f.integer);
}

void set(ThresholdConfig& cfg, const ThresholdField& f, double value) {
  if (f.real != nullptr) {
    cfg.*f.real = value;
  } else {
    if (value != std::floor(value)) throw ValidationError(std::string(f.name) + " must be an integer");
    cfg.*f.integer = static_cast<int>(value);
  }
}

std::string_view to_string(Handedness h) { return h == Handedness::kRight ? "right" : "left"; }

Handedness parse_handedness(std::string_view s) {
  if (s == "right") return Handedness::kRight;
  if (s == "left") return Handedness::kLeft;
  throw ValidationError("handedness must be 'right' or 'left'");
}

}  // namespace streetlabel
