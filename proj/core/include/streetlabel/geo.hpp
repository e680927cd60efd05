#pragma once

#include <numbers>

namespace streetlabel::geo {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Meters east (x) and north (y) of a projector's reference point.
struct PlanePoint {
  double x_m = 0.0;
  double y_m = 0.0;

  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

/// Throws ValidationError unless both fields are finite and in
/// lat [-90, 90], lon [-180, 180).
void validate(const GeoPoint& p);

/// Local equirectangular tangent-plane projection. x is scaled by the cosine
/// of the reference latitude, so short distances come out in true meters.
/// Immutable; safe to share between threads.
class Projector {
 public:
  explicit Projector(GeoPoint ref, double earth_radius_m = kEarthRadiusM);

  PlanePoint project(const GeoPoint& p) const;
  /// Exact inverse of project(); longitude is normalized into [-180, 180).
  GeoPoint unproject(const PlanePoint& p) const;

  const GeoPoint& ref() const { return ref_; }
  double earth_radius_m() const { return radius_; }

 private:
  GeoPoint ref_;
  double radius_;
  double meters_per_deg_lat_;
  double meters_per_deg_lon_;
};

struct SegmentProjection {
  double dist_m = 0.0;
  /// Clamped projection parameter along a->b, in [0, 1].
  double t = 0.0;
  PlanePoint closest;
};

SegmentProjection point_segment_distance(const PlanePoint& p, const PlanePoint& a,
                                         const PlanePoint& b);

double distance(const PlanePoint& a, const PlanePoint& b);

/// a - b folded into (-180, 180].
double angdiff(double a_deg, double b_deg);

/// Folds into [0, 360).
double wrap360(double deg);

/// Compass bearing from `from` to `to` (north 0, east 90). Throws
/// ValidationError for coincident points.
double bearing(const PlanePoint& from, const PlanePoint& to);

/// Unit direction vector (east, north) for a compass heading.
PlanePoint heading_vector(double heading_deg);

}  // namespace streetlabel::geo
