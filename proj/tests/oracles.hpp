#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library's geometry code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>

#include "streetlabel/osm.hpp"

namespace oracle {

inline constexpr double kPi = std::numbers::pi;
inline double rad(double d) { return d * kPi / 180.0; }
inline double deg(double r) { return r * 180.0 / kPi; }

/// Great-circle distance on a sphere.
inline double haversine(double lat1, double lon1, double lat2, double lon2, double radius = 6371000.0) {
  const double dlat = rad(lat2 - lat1);
  const double dlon = rad(lon2 - lon1);
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(rad(lat1)) * std::cos(rad(lat2)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * radius * std::asin(std::min(1.0, std::sqrt(a)));
}

struct Hit {
  std::int64_t way = 0;
  std::size_t segment = 0;
  double dist = std::numeric_limits<double>::infinity();
};

/// Distance from (px, py) to segment (ax, ay)-(bx, by), by minimizing over
/// the parameter analytically and clamping.
inline double seg_dist(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
  const double cx = ax + t * dx - px;
  const double cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

/// Exhaustive nearest segment with the (distance, way, segment) order.
inline Hit brute_nearest(const streetlabel::osm::ProjectedNetwork& net, double x, double y) {
  Hit best;
  for (const auto& [id, way] : net.network().ways()) {
    for (std::size_t i = 0; i + 1 < way.node_ids.size(); ++i) {
      const auto& a = net.xy(way.node_ids[i]);
      const auto& b = net.xy(way.node_ids[i + 1]);
      const double d = seg_dist(x, y, a.x_m, a.y_m, b.x_m, b.y_m);
      if (d < best.dist || (d == best.dist && (id < best.way || (id == best.way && i < best.segment)))) {
        best = {id, i, d};
      }
    }
  }
  return best;
}

struct Angles {
  double az = 0.0;
  double el = 0.0;
};

/// Ray through continuous crop point (px, py) built from explicit camera
/// basis vectors in an east-north-up frame.
inline Angles ray_trace(double heading_deg, double pitch_deg, double fov_deg, double w, double h, double px,
                        double py) {
  const double H = rad(heading_deg);
  const double P = rad(pitch_deg);
  const double fwd[3] = {std::sin(H) * std::cos(P), std::cos(H) * std::cos(P), std::sin(P)};
  const double right[3] = {std::cos(H), -std::sin(H), 0.0};
  // up = right x fwd
  const double up[3] = {right[1] * fwd[2] - right[2] * fwd[1], right[2] * fwd[0] - right[0] * fwd[2],
                        right[0] * fwd[1] - right[1] * fwd[0]};
  const double f = (w / 2.0) / std::tan(rad(fov_deg) / 2.0);
  const double x = px - w / 2.0;
  const double y = h / 2.0 - py;
  double d[3];
  for (int k = 0; k < 3; ++k) d[k] = f * fwd[k] + x * right[k] + y * up[k];
  const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  double az = deg(std::atan2(d[0], d[1]));
  if (az < 0) az += 360.0;
  return {az, deg(std::asin(d[2] / n))};
}

/// Smallest absolute difference between two compass angles.
inline double ang_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("streetlabel_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
