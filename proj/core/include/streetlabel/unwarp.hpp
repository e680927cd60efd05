#pragma once

#include <cstddef>
#include <vector>

#include "streetlabel/image.hpp"
#include "streetlabel/labels.hpp"
#include "streetlabel/panograph.hpp"

namespace streetlabel::unwarp {

// Panorama convention: the centre column faces the capture vehicle's
// azimuth, azimuth grows to the right, row 0 is the zenith and the bottom
// edge the nadir. Column c covers azimuths starting at
//   vehicle_azimuth - 180 + 360 * c / width.

struct ViewAngles {
  double azimuth_deg = 0.0;  ///< world azimuth in [0, 360)
  double elevation_deg = 0.0;
};

/// Direction of the ray through continuous image-plane point (px, py) of a
/// pinhole crop. (0, 0) is the top-left corner of the image, pixel (u, v)
/// has its centre at (u + 0.5, v + 0.5), and the focal length is
/// (width / 2) / tan(fov / 2). The ray is pitched, then yawed to the crop
/// heading.
ViewAngles ray_angles(const CropSpec& crop, double px, double py);

/// Continuous panorama coordinates (col in [0, width), row in [0, height])
/// where a world direction lands.
struct PanoCoord {
  double col = 0.0;
  double row = 0.0;
};

PanoCoord pano_coord(const ViewAngles& view, std::size_t pano_w, std::size_t pano_h,
                     double pano_azimuth_deg);

/// Inverse of pano_coord().
ViewAngles pano_angles(const PanoCoord& c, std::size_t pano_w, std::size_t pano_h,
                       double pano_azimuth_deg);

/// Source coordinates for every output pixel, row-major.
struct SamplingMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<PanoCoord> coords;

  const PanoCoord& at(std::size_t u, std::size_t v) const { return coords[v * width + u]; }
};

/// Throws ValidationError for a crop with fov outside (0, 180) or empty size.
SamplingMap sampling_map(const CropSpec& crop, std::size_t pano_w, std::size_t pano_h,
                         double pano_azimuth_deg);

/// Bilinear resampling at pixel-centre convention: the value of source pixel
/// (x, y) sits at (x + 0.5, y + 0.5). Columns wrap across the 0/360 seam,
/// rows clamp at the poles. Throws ValidationError if the map has
/// coordinates outside the panorama bounds.
Image bilinear_sample(const Image& pano, const SamplingMap& map);

Image unwarp(const Image& pano, const pano::PanoMeta& meta, const CropSpec& crop);

}  // namespace streetlabel::unwarp
