#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "streetlabel/osm.hpp"

namespace streetlabel {

/// A perspective view cut from a panorama.
struct CropSpec {
  std::string pano_id;
  /// World azimuth of the view centre, [0, 360).
  double heading_deg = 0.0;
  double pitch_deg = 0.0;
  double fov_deg = 100.0;
  int width_px = 227;
  int height_px = 227;

  void validate() const;
  friend bool operator==(const CropSpec&, const CropSpec&) = default;
};

enum class Task {
  kIntersection,
  kIntersectionDistance,
  kDriveable,
  kHeadingAngle,
  kBikeLane,
  kSpeedLimit,
  kOneWay,
  kWrongWay,
  kNumLanes,
};

inline constexpr std::array<Task, 9> kAllTasks = {
    Task::kIntersection, Task::kIntersectionDistance, Task::kDriveable,
    Task::kHeadingAngle, Task::kBikeLane,             Task::kSpeedLimit,
    Task::kOneWay,       Task::kWrongWay,             Task::kNumLanes,
};

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

enum class LabelKind { kBinary, kReal, kInteger };
LabelKind label_kind(Task t);
inline bool is_categorical(Task t) { return label_kind(t) == LabelKind::kBinary; }

/// Task plus value. Binary tasks hold a bool (intersection present,
/// driveable, bike lane, one-way, wrong-way); intersection distance (m),
/// heading angle (deg, clockwise of forward) and speed limit (mph) hold a
/// double; lane count holds an int64.
struct AttributeLabel {
  Task task = Task::kIntersection;
  std::variant<bool, double, std::int64_t> value = false;

  bool flag() const { return std::get<bool>(value); }
  double real() const { return std::get<double>(value); }
  std::int64_t count() const { return std::get<std::int64_t>(value); }
  /// Numeric view of any value (bool -> 0/1).
  double as_double() const;

  /// Throws ValidationError when the value type does not match the task or a
  /// task invariant fails (distance in (0, max], |angle| <= max, lanes >= 1).
  void validate(double max_distance_m = 30.0, double max_heading_deg = 60.0) const;

  static AttributeLabel binary(Task t, bool v) { return {t, v}; }
  static AttributeLabel real(Task t, double v) { return {t, v}; }
  static AttributeLabel integer(Task t, std::int64_t v) { return {t, v}; }

  friend bool operator==(const AttributeLabel&, const AttributeLabel&) = default;
};

enum class Split { kUnassigned, kTrain, kTest };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct LabeledSample {
  std::string sample_id;
  CropSpec crop;
  AttributeLabel label;
  osm::WayId way_id = 0;
  Split split = Split::kUnassigned;
  std::string provenance;

  const std::string& pano_id() const { return crop.pano_id; }
  Task task() const { return label.task; }

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Deterministic id from pano, task, crop heading and a per-(pano, task)
/// draw ordinal: 16 lowercase hex digits.
std::string make_sample_id(std::string_view pano_id, Task task, double heading_deg,
                           std::size_t ordinal = 0);

/// Id of the k-th (1-based) balancing duplicate of `original_id`.
std::string duplicate_sample_id(std::string_view original_id, std::size_t k);
bool is_duplicate_id(std::string_view sample_id);
std::string_view original_id(std::string_view sample_id);

/// Rounds to 6 decimal places, the manifest's number precision, so that a
/// value survives a write/read cycle exactly.
double quantize6(double v);

}  // namespace streetlabel
