#pragma once

// Independent reference implementations used only by tests. None of these share
// code with the library.

#include <cmath>
#include <numbers>
#include <vector>

#include <map>
#include <set>
#include <tuple>

#include "json.hpp"
#include "landtriage/compliance.hpp"
#include "landtriage/geo.hpp"
#include "landtriage/routing.hpp"

namespace oracle {

using landtriage::geo::GeoPoint;
using landtriage::geo::Ring;

// Great-circle distance by the spherical law of cosines in long double.
inline double great_circle_m(GeoPoint a, GeoPoint b, long double radius = 6'371'000.0L) {
  const long double k = std::numbers::pi_v<long double> / 180.0L;
  const long double c = std::sin(a.lat * k) * std::sin(b.lat * k) +
                        std::cos(a.lat * k) * std::cos(b.lat * k) * std::cos((b.lon - a.lon) * k);
  return static_cast<double>(radius * std::acos(std::fmin(1.0L, std::fmax(-1.0L, c))));
}

// Winding number of ring around p (Sunday's crossing rule).
inline int winding_number(const GeoPoint& p, const Ring& ring) {
  auto is_left = [](const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) {
    return (b.lon - a.lon) * (c.lat - a.lat) - (c.lon - a.lon) * (b.lat - a.lat);
  };
  int wn = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[(i + 1) % ring.size()];
    if (a.lat <= p.lat) {
      if (b.lat > p.lat && is_left(a, b, p) > 0) ++wn;
    } else if (b.lat <= p.lat && is_left(a, b, p) < 0) {
      --wn;
    }
  }
  return wn;
}

inline bool inside(const GeoPoint& p, const Ring& exterior, const std::vector<Ring>& holes) {
  if (winding_number(p, exterior) == 0) return false;
  for (const auto& h : holes) {
    if (winding_number(p, h) != 0) return false;
  }
  return true;
}

inline double segment_distance(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  const double dx = b.lon - a.lon, dy = b.lat - a.lat;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
  t = std::fmin(1.0, std::fmax(0.0, t));
  return std::hypot(p.lon - (a.lon + t * dx), p.lat - (a.lat + t * dy));
}

inline double boundary_distance(const GeoPoint& p, const Ring& ring) {
  double d = 1e300;
  for (std::size_t i = 0; i < ring.size(); ++i) d = std::fmin(d, segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
  return d;
}

// Reference assignment set: each detection's eligible verifiers are enumerated
// directly; a detection is kept by a verifier when fewer than k of that
// verifier's eligible detections outrank it.
inline std::set<std::tuple<std::string, std::string, int>> elpc_assignments(
    const std::vector<landtriage::detections::Detection>& dets, const nlohmann::json& verifiers,
    const landtriage::routing::ElpcParams& p) {
  using landtriage::detections::Detection;
  auto ranks_above = [](const Detection& a, const Detection& b) {
    return a.score > b.score || (a.score == b.score && a.detection_id < b.detection_id);
  };
  std::map<std::string, std::vector<const Detection*>> eligible;
  for (const auto& d : dets) {
    std::vector<std::pair<double, std::string>> in_range;
    for (const auto& v : verifiers) {
      if (v["org"] != "elpc" || !v["active"].get<bool>()) continue;
      const double dist = great_circle_m(d.centroid(), {v["lat"].get<double>(), v["lon"].get<double>()});
      if (dist <= p.radius_m) in_range.emplace_back(dist, v["verifier_id"].get<std::string>());
    }
    std::sort(in_range.begin(), in_range.end());
    for (std::size_t i = 0; i < in_range.size(); ++i) {
      eligible[in_range[i].second].push_back(&d);
      if (p.policy == landtriage::routing::Policy::nearest_exclusive) break;
    }
  }
  std::set<std::tuple<std::string, std::string, int>> out;
  for (const auto& [vid, list] : eligible) {
    for (const auto* d : list) {
      int above = 0;
      for (const auto* o : list) above += ranks_above(*o, *d);
      if (above < p.top_k) out.emplace(vid, d->detection_id, above + 1);
    }
  }
  return out;
}

// Expected ruling for one cell of the entity x phase x surface x window x
// emergency grid, written out as a literal table. Indices follow the enum order
// liquid/solid/unknown and snow_covered/frozen/bare_unfrozen/unknown.
inline landtriage::compliance::Compliance expected_ruling(landtriage::compliance::EntityClass ec, int phase, int surface,
                                                         bool in_window, bool emergency) {
  using landtriage::compliance::Compliance;
  using landtriage::compliance::EntityClass;
  constexpr Compliance V = Compliance::violation, O = Compliance::compliant_other, I = Compliance::indeterminate;
  constexpr Compliance kCafoInWindow[3][4] = {
      {V, V, V, V},
      {V, V, O, I},
      {V, V, I, I},
  };
  if (!in_window) return Compliance::compliant_pre_window;
  if (ec == EntityClass::afo) return Compliance::compliant_unregulated_entity;
  if (emergency) return O;
  if (ec == EntityClass::unknown) return I;
  return kCafoInWindow[phase][surface];
}

}  // namespace oracle
