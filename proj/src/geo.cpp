#include "landtriage/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "landtriage/error.hpp"

namespace landtriage::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
  return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  if (cross(a, b, p) != 0.0) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
         p.lat <= std::max(a.lat, b.lat);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_intersect(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c, const GeoPoint& d) {
  int d1 = sign(cross(c, d, a));
  int d2 = sign(cross(c, d, b));
  int d3 = sign(cross(a, b, c));
  int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) || (d3 == 0 && on_segment(c, a, b)) ||
         (d4 == 0 && on_segment(d, a, b));
}

// Liang-Barsky clip against the closed box.
bool segment_touches_box(const GeoPoint& a, const GeoPoint& b, const GeoBBox& box) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.lon - a.lon;
  const double dy = b.lat - a.lat;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.lon - box.min_lon, box.max_lon - a.lon, a.lat - box.min_lat, box.max_lat - a.lat};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
  }
  return t0 <= t1;
}

enum class RingSide { outside, inside, boundary };

RingSide locate_in_ring(const GeoPoint& pt, const Ring& ring) {
  const std::size_t n = ring.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[j];
    if (on_segment(pt, a, b)) return RingSide::boundary;
    if ((a.lat > pt.lat) != (b.lat > pt.lat)) {
      double x = (b.lon - a.lon) * (pt.lat - a.lat) / (b.lat - a.lat) + a.lon;
      if (pt.lon < x) inside = !inside;
    }
  }
  return inside ? RingSide::inside : RingSide::outside;
}

Ring normalize_ring(Ring ring) {
  while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

void validate_ring(const Ring& ring, const std::string& field) {
  if (ring.size() < 3) throw_validation("invalid_geometry", field, field + ": ring needs at least 3 vertices");
  for (const auto& p : ring) {
    if (!is_valid(p)) throw_validation("invalid_geometry", field, field + ": vertex out of range");
  }
  if (!ring_is_simple(ring)) throw_validation("invalid_geometry", field, field + ": ring self-intersects");
}

}  // namespace

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 &&
         p.lon <= 180.0;
}

GeoPoint make_point(double lat, double lon, const char* field) {
  GeoPoint p{lat, lon};
  if (!is_valid(p)) throw_validation("invalid_coordinate", field, std::string(field) + ": lat/lon out of range");
  return p;
}

bool is_valid(const GeoBBox& b) {
  return is_valid(GeoPoint{b.min_lat, b.min_lon}) && is_valid(GeoPoint{b.max_lat, b.max_lon}) &&
         b.min_lat <= b.max_lat && b.min_lon <= b.max_lon;
}

GeoBBox make_bbox(double min_lat, double min_lon, double max_lat, double max_lon, const char* field) {
  GeoBBox b{min_lat, min_lon, max_lat, max_lon};
  if (!is_valid(b)) throw_validation("invalid_bbox", field, std::string(field) + ": corners out of range or inverted");
  return b;
}

GeoBBox GeoPolygon::bounds() const {
  GeoBBox b{90.0, 180.0, -90.0, -180.0};
  for (const auto& p : exterior) {
    b.min_lat = std::min(b.min_lat, p.lat);
    b.max_lat = std::max(b.max_lat, p.lat);
    b.min_lon = std::min(b.min_lon, p.lon);
    b.max_lon = std::max(b.max_lon, p.lon);
  }
  return b;
}

double ring_signed_area_deg2(const Ring& ring) {
  double twice = 0.0;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    twice += ring[j].lon * ring[i].lat - ring[i].lon * ring[j].lat;
  }
  return twice / 2.0;
}

bool ring_is_simple(const Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[(i + 1) % n];
    if (a == b) return false;
    for (std::size_t k = i + 1; k < n; ++k) {
      // Neighbouring edges share a vertex by construction.
      if (k == i + 1 || (i == 0 && k == n - 1)) continue;
      if (segments_intersect(a, b, ring[k], ring[(k + 1) % n])) return false;
    }
  }
  return true;
}

GeoPolygon make_polygon(Ring exterior, std::vector<Ring> holes) {
  GeoPolygon poly;
  poly.exterior = normalize_ring(std::move(exterior));
  validate_ring(poly.exterior, "exterior");
  if (ring_signed_area_deg2(poly.exterior) == 0.0) {
    throw_validation("invalid_geometry", "exterior", "exterior: ring has zero area");
  }
  for (auto& h : holes) {
    poly.holes.push_back(normalize_ring(std::move(h)));
    validate_ring(poly.holes.back(), "hole");
  }
  return poly;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  double h = s * s + std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * t * t;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

GeoBBox make_aoi(const GeoPoint& center, double side_m) {
  if (!is_valid(center)) throw_validation("invalid_coordinate", "center", "AOI center out of range");
  if (!(side_m >= 0.0) || !std::isfinite(side_m)) throw_validation("invalid_side", "side_m", "AOI side must be >= 0");
  if (std::abs(center.lat) > 89.0) {
    throw_validation("polar_aoi", "center", "AOI center within 1 degree of a pole; longitude scaling degenerates");
  }
  const double half_lat = side_m / 2.0 / kMetersPerDegree;
  const double half_lon = side_m / 2.0 / (kMetersPerDegree * std::cos(center.lat * kDegToRad));
  GeoBBox b{center.lat - half_lat, center.lon - half_lon, center.lat + half_lat, center.lon + half_lon};
  if (!is_valid(b)) throw_validation("invalid_bbox", "side_m", "AOI extends past valid coordinates");
  return b;
}

bool bbox_intersects_polygon(const GeoBBox& b, const GeoPolygon& p) {
  if (!b.intersects(p.bounds())) return false;
  auto ring_touches = [&](const Ring& ring) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      if (segment_touches_box(ring[j], ring[i], b)) return true;
    }
    return false;
  };
  if (ring_touches(p.exterior)) return true;
  for (const auto& h : p.holes) {
    if (ring_touches(h)) return true;
  }
  // No boundary reaches the box: it lies wholly inside the region, wholly in a hole, or outside.
  return point_in_polygon(b.center(), p);
}

bool point_in_polygon(const GeoPoint& pt, const GeoPolygon& p) {
  RingSide side = locate_in_ring(pt, p.exterior);
  if (side != RingSide::inside) return side == RingSide::boundary;
  for (const auto& h : p.holes) {
    if (locate_in_ring(pt, h) == RingSide::inside) return false;
  }
  return true;
}

double bbox_area_m2(const GeoBBox& b) {
  const double mid_lat = (b.min_lat + b.max_lat) / 2.0;
  const double dy = (b.max_lat - b.min_lat) * kMetersPerDegree;
  const double dx = (b.max_lon - b.min_lon) * kMetersPerDegree * std::cos(mid_lat * kDegToRad);
  return std::max(0.0, dy * dx);
}

double bbox_iou(const GeoBBox& a, const GeoBBox& b) {
  const double mid_lat = (std::min(a.min_lat, b.min_lat) + std::max(a.max_lat, b.max_lat)) / 2.0;
  const double kx = std::cos(mid_lat * kDegToRad);
  auto area = [kx](double dlat, double dlon) { return std::max(0.0, dlat) * std::max(0.0, dlon) * kx; };
  const double inter = area(std::min(a.max_lat, b.max_lat) - std::max(a.min_lat, b.min_lat),
                            std::min(a.max_lon, b.max_lon) - std::max(a.min_lon, b.min_lon));
  const double uni = area(a.max_lat - a.min_lat, a.max_lon - a.min_lon) +
                     area(b.max_lat - b.min_lat, b.max_lon - b.min_lon) - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return inter / uni;
}

GeoBBox expand_m(const GeoBBox& b, double margin_m) {
  const double mid_lat = (b.min_lat + b.max_lat) / 2.0;
  const double dlat = margin_m / kMetersPerDegree;
  const double dlon = margin_m / (kMetersPerDegree * std::max(1e-6, std::cos(mid_lat * kDegToRad)));
  return {std::max(-90.0, b.min_lat - dlat), std::max(-180.0, b.min_lon - dlon), std::min(90.0, b.max_lat + dlat),
          std::min(180.0, b.max_lon + dlon)};
}

}  // namespace landtriage::geo
