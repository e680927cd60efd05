#include "streetlabel/geo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "streetlabel/error.hpp"

namespace streetlabel::geo {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string("non-finite ") + what);
}

void require_finite(const PlanePoint& p) {
  require_finite(p.x_m, "plane x");
  require_finite(p.y_m, "plane y");
}

}  // namespace

void validate(const GeoPoint& p) {
  require_finite(p.lat_deg, "latitude");
  require_finite(p.lon_deg, "longitude");
  if (p.lat_deg < -90.0 || p.lat_deg > 90.0) {
    throw ValidationError("latitude out of range: " + std::to_string(p.lat_deg));
  }
  if (p.lon_deg < -180.0 || p.lon_deg >= 180.0) {
    throw ValidationError("longitude out of range: " + std::to_string(p.lon_deg));
  }
}

Projector::Projector(GeoPoint ref, double earth_radius_m) : ref_(ref), radius_(earth_radius_m) {
  validate(ref);
  if (!(std::abs(ref.lat_deg) < 85.0)) {
    throw ValidationError("projection reference too close to a pole: lat " +
                          std::to_string(ref.lat_deg));
  }
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw ValidationError("bad earth radius");
  meters_per_deg_lat_ = radius_ * kDegToRad;
  meters_per_deg_lon_ = meters_per_deg_lat_ * std::cos(ref.lat_deg * kDegToRad);
}

PlanePoint Projector::project(const GeoPoint& p) const {
  validate(p);
  // Longitude difference taken the short way round the antimeridian.
  const double dlon = angdiff(p.lon_deg, ref_.lon_deg);
  return {dlon * meters_per_deg_lon_, (p.lat_deg - ref_.lat_deg) * meters_per_deg_lat_};
}

GeoPoint Projector::unproject(const PlanePoint& p) const {
  require_finite(p);
  double lon = ref_.lon_deg + p.x_m / meters_per_deg_lon_;
  lon = wrap360(lon + 180.0) - 180.0;
  return {ref_.lat_deg + p.y_m / meters_per_deg_lat_, lon};
}

SegmentProjection point_segment_distance(const PlanePoint& p, const PlanePoint& a,
                                         const PlanePoint& b) {
  require_finite(p);
  require_finite(a);
  require_finite(b);
  const double dx = b.x_m - a.x_m;
  const double dy = b.y_m - a.y_m;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x_m - a.x_m) * dx + (p.y_m - a.y_m) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const PlanePoint closest{a.x_m + t * dx, a.y_m + t * dy};
  return {distance(p, closest), t, closest};
}

double distance(const PlanePoint& a, const PlanePoint& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

double angdiff(double a_deg, double b_deg) {
  double r = std::fmod(a_deg - b_deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

double wrap360(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative can round up to exactly 360.
  if (r >= 360.0) r -= 360.0;
  return r;
}

double bearing(const PlanePoint& from, const PlanePoint& to) {
  require_finite(from);
  require_finite(to);
  const double dx = to.x_m - from.x_m;
  const double dy = to.y_m - from.y_m;
  if (dx == 0.0 && dy == 0.0) throw ValidationError("bearing between coincident points");
  return wrap360(std::atan2(dx, dy) * kRadToDeg);
}

PlanePoint heading_vector(double heading_deg) {
  const double r = heading_deg * kDegToRad;
  return {std::sin(r), std::cos(r)};
}

}  // namespace streetlabel::geo
