#include "streetlabel/unwarp.hpp"

#include <algorithm>
#include <cmath>

#include "streetlabel/error.hpp"
#include "streetlabel/geo.hpp"

namespace streetlabel::unwarp {

using geo::kDegToRad;
using geo::kRadToDeg;

namespace {

void check_crop(const CropSpec& crop) {
  if (!(crop.fov_deg > 0.0 && crop.fov_deg < 180.0)) {
    throw ValidationError("crop fov must be in (0, 180)");
  }
  if (crop.width_px <= 0 || crop.height_px <= 0) throw ValidationError("crop size must be positive");
}

}  // namespace

namespace {

// Per-crop constants of ray_angles().
struct Camera {
  double w;
  double h;
  double f;
  double sin_p;
  double cos_p;
  double heading;

  explicit Camera(const CropSpec& crop)
      : w(crop.width_px),
        h(crop.height_px),
        f((w / 2.0) / std::tan(crop.fov_deg / 2.0 * kDegToRad)),
        sin_p(std::sin(crop.pitch_deg * kDegToRad)),
        cos_p(std::cos(crop.pitch_deg * kDegToRad)),
        heading(crop.heading_deg) {}

  ViewAngles ray(double px, double py) const {
    // Camera frame: x right, y up, z forward.
    const double x = px - w / 2.0;
    const double y = h / 2.0 - py;
    const double y1 = f * sin_p + y * cos_p;
    const double z1 = f * cos_p - y * sin_p;
    return {geo::wrap360(heading + std::atan2(x, z1) * kRadToDeg),
            std::atan2(y1, std::hypot(x, z1)) * kRadToDeg};
  }
};

}  // namespace

ViewAngles ray_angles(const CropSpec& crop, double px, double py) {
  check_crop(crop);
  return Camera(crop).ray(px, py);
}

PanoCoord pano_coord(const ViewAngles& view, std::size_t pano_w, std::size_t pano_h,
                     double pano_azimuth_deg) {
  const double rel = geo::wrap360(view.azimuth_deg - pano_azimuth_deg + 180.0);
  double col = rel / 360.0 * static_cast<double>(pano_w);
  if (col >= static_cast<double>(pano_w)) col = 0.0;
  return {col, (90.0 - view.elevation_deg) / 180.0 * static_cast<double>(pano_h)};
}

ViewAngles pano_angles(const PanoCoord& c, std::size_t pano_w, std::size_t pano_h,
                       double pano_azimuth_deg) {
  return {geo::wrap360(c.col / static_cast<double>(pano_w) * 360.0 + pano_azimuth_deg - 180.0),
          90.0 - c.row / static_cast<double>(pano_h) * 180.0};
}

SamplingMap sampling_map(const CropSpec& crop, std::size_t pano_w, std::size_t pano_h,
                         double pano_azimuth_deg) {
  check_crop(crop);
  if (pano_w == 0 || pano_h == 0) throw ValidationError("panorama size must be positive");
  SamplingMap map;
  map.width = static_cast<std::size_t>(crop.width_px);
  map.height = static_cast<std::size_t>(crop.height_px);
  map.coords.reserve(map.width * map.height);
  const Camera cam(crop);
  for (std::size_t v = 0; v < map.height; ++v) {
    for (std::size_t u = 0; u < map.width; ++u) {
      const ViewAngles a = cam.ray(static_cast<double>(u) + 0.5, static_cast<double>(v) + 0.5);
      map.coords.push_back(pano_coord(a, pano_w, pano_h, pano_azimuth_deg));
    }
  }
  return map;
}

Image bilinear_sample(const Image& pano, const SamplingMap& map) {
  if (pano.empty()) throw ValidationError("empty panorama");
  if (map.width == 0 || map.height == 0 || map.coords.size() != map.width * map.height) {
    throw ValidationError("sampling map dimensions do not match its coordinates");
  }
  const auto pw = static_cast<std::int64_t>(pano.width());
  const auto ph = static_cast<std::int64_t>(pano.height());
  Image out(map.width, map.height);
  for (std::size_t v = 0; v < map.height; ++v) {
    for (std::size_t u = 0; u < map.width; ++u) {
      const PanoCoord& c = map.at(u, v);
      if (!(c.col >= 0.0 && c.col < static_cast<double>(pw) && c.row >= 0.0 &&
            c.row <= static_cast<double>(ph))) {
        throw ValidationError("sampling map coordinate outside the panorama");
      }
      const double x = c.col - 0.5;
      const double y = std::clamp(c.row - 0.5, 0.0, static_cast<double>(ph - 1));
      const double fx0 = std::floor(x);
      const double fy0 = std::floor(y);
      const double ax = x - fx0;
      const double ay = y - fy0;
      std::int64_t xi = static_cast<std::int64_t>(fx0);
      if (xi < 0) xi += pw;  // col in [0, w) puts fx0 in [-1, w - 1]
      const auto x0 = static_cast<std::size_t>(xi);
      const auto x1 = x0 + 1 == static_cast<std::size_t>(pw) ? 0 : x0 + 1;
      const auto y0 = static_cast<std::size_t>(fy0);
      const auto y1 = std::min(y0 + 1, static_cast<std::size_t>(ph - 1));
      const Rgb p00 = pano.at(x0, y0);
      const Rgb p10 = pano.at(x1, y0);
      const Rgb p01 = pano.at(x0, y1);
      const Rgb p11 = pano.at(x1, y1);
      Rgb px{};
      for (std::size_t k = 0; k < 3; ++k) {
        const double top = p00[k] + ax * (p10[k] - p00[k]);
        const double bottom = p01[k] + ax * (p11[k] - p01[k]);
        px[k] = static_cast<std::uint8_t>(std::clamp(top + ay * (bottom - top), 0.0, 255.0) + 0.5);
      }
      out.set(u, v, px);
    }
  }
  return out;
}

Image unwarp(const Image& pano, const pano::PanoMeta& meta, const CropSpec& crop) {
  return bilinear_sample(pano, sampling_map(crop, pano.width(), pano.height(), meta.azimuth_deg));
}

}  // namespace streetlabel::unwarp
