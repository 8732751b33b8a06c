#pragma once

#include <vector>

namespace landtriage::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;
// Local equirectangular scale used for AOIs and box areas.
inline constexpr double kMetersPerDegree = 111'320.0;
inline constexpr double kDefaultAoiSideM = 6'000.0;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p);
// Throws validation Error naming `field` when out of range or non-finite.
GeoPoint make_point(double lat, double lon, const char* field = "point");

struct GeoBBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  GeoPoint center() const { return {(min_lat + max_lat) / 2.0, (min_lon + max_lon) / 2.0}; }
  bool contains(const GeoPoint& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
  bool intersects(const GeoBBox& o) const {
    return min_lat <= o.max_lat && o.min_lat <= max_lat && min_lon <= o.max_lon && o.min_lon <= max_lon;
  }

  friend bool operator==(const GeoBBox&, const GeoBBox&) = default;
};

bool is_valid(const GeoBBox& b);
GeoBBox make_bbox(double min_lat, double min_lon, double max_lat, double max_lon, const char* field = "bbox");

using Ring = std::vector<GeoPoint>;

// Rings are implicitly closed; a repeated closing vertex is stripped on validation.
struct GeoPolygon {
  Ring exterior;
  std::vector<Ring> holes;

  GeoBBox bounds() const;
};

// Normalizes (drops closing duplicates) and checks: >= 3 vertices per ring,
// no self-intersections, positive exterior area. Throws validation Error.
GeoPolygon make_polygon(Ring exterior, std::vector<Ring> holes = {});

// Signed shoelace area in squared degrees; positive for counter-clockwise rings.
double ring_signed_area_deg2(const Ring& ring);
bool ring_is_simple(const Ring& ring);

double haversine_m(const GeoPoint& a, const GeoPoint& b);

// Square box of side `side_m` centered on `center`. Throws within 1 degree of a pole.
GeoBBox make_aoi(const GeoPoint& center, double side_m = kDefaultAoiSideM);

// Boundary contact counts as intersecting.
bool bbox_intersects_polygon(const GeoBBox& b, const GeoPolygon& p);

// Ray casting; points on any ring boundary are inside, points strictly inside a hole are not.
bool point_in_polygon(const GeoPoint& pt, const GeoPolygon& p);

double bbox_area_m2(const GeoBBox& b);

// Intersection over union with longitudes scaled by cos of the pair's mid latitude.
double bbox_iou(const GeoBBox& a, const GeoBBox& b);

// Grows the box by `margin_m` on every side (equirectangular).
GeoBBox expand_m(const GeoBBox& b, double margin_m);

}  // namespace landtriage::geo
