#include "streetlabel/labels.hpp"

#include <cmath>

#include <fmt/format.h>

#include "streetlabel/error.hpp"
#include "streetlabel/rng.hpp"

namespace streetlabel {

void CropSpec::validate() const {
  if (pano_id.empty()) throw ValidationError("crop without pano_id");
  if (!std::isfinite(heading_deg) || heading_deg < 0.0 || heading_deg >= 360.0) {
    throw ValidationError("crop heading out of [0, 360)");
  }
  if (!std::isfinite(pitch_deg) || std::abs(pitch_deg) > 90.0) throw ValidationError("bad crop pitch");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ValidationError("crop fov must be in (0, 180)");
  if (width_px <= 0 || height_px <= 0) throw ValidationError("crop size must be positive");
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::kIntersection: return "intersection";
    case Task::kIntersectionDistance: return "intersection_distance";
    case Task::kDriveable: return "driveable";
    case Task::kHeadingAngle: return "heading_angle";
    case Task::kBikeLane: return "bike_lane";
    case Task::kSpeedLimit: return "speed_limit";
    case Task::kOneWay: return "one_way";
    case Task::kWrongWay: return "wrong_way";
    case Task::kNumLanes: return "num_lanes";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  for (Task t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  throw ValidationError("unknown task '" + std::string(s) + "'");
}

LabelKind label_kind(Task t) {
  switch (t) {
    case Task::kIntersectionDistance:
    case Task::kHeadingAngle:
    case Task::kSpeedLimit:
      return LabelKind::kReal;
    case Task::kNumLanes:
      return LabelKind::kInteger;
    default:
      return LabelKind::kBinary;
  }
}

double AttributeLabel::as_double() const {
  return std::visit([](auto v) { return static_cast<double>(v); }, value);
}

void AttributeLabel::validate(double max_distance_m, double max_heading_deg) const {
  const bool type_ok = (label_kind(task) == LabelKind::kBinary && std::holds_alternative<bool>(value)) ||
                       (label_kind(task) == LabelKind::kReal && std::holds_alternative<double>(value)) ||
                       (label_kind(task) == LabelKind::kInteger &&
                        std::holds_alternative<std::int64_t>(value));
  if (!type_ok) throw ValidationError("label value type does not match task " + std::string(to_string(task)));
  switch (task) {
    case Task::kIntersectionDistance:
      if (!(real() > 0.0 && real() <= max_distance_m)) {
        throw ValidationError("intersection distance outside (0, max]");
      }
      break;
    case Task::kHeadingAngle:
      if (!(std::abs(real()) <= max_heading_deg)) throw ValidationError("heading angle beyond limit");
      break;
    case Task::kSpeedLimit:
      if (!(real() > 0.0) || !std::isfinite(real())) throw ValidationError("speed limit must be positive");
      break;
    case Task::kNumLanes:
      if (count() < 1) throw ValidationError("lane count must be >= 1");
      break;
    default:
      break;
  }
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kUnassigned: return "unassigned";
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
  }
  return "unassigned";
}

Split parse_split(std::string_view s) {
  if (s == "unassigned") return Split::kUnassigned;
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

std::string make_sample_id(std::string_view pano_id, Task task, double heading_deg,
                           std::size_t ordinal) {
  const std::string key =
      fmt::format("{}|{}|{:.6f}|{}", pano_id, to_string(task), heading_deg, ordinal);
  return hex64(fnv1a64(key));
}

namespace {
constexpr std::string_view kDupMarker = "~d";
}

std::string duplicate_sample_id(std::string_view original, std::size_t k) {
  return fmt::format("{}{}{}", original, kDupMarker, k);
}

bool is_duplicate_id(std::string_view sample_id) {
  return sample_id.find(kDupMarker) != std::string_view::npos;
}

std::string_view original_id(std::string_view sample_id) {
  return sample_id.substr(0, sample_id.find(kDupMarker));
}

double quantize6(double v) {
  const double q = std::round(v * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;  // no negative zero
}

}  // namespace streetlabel
