#include "landtriage/registry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grid_index.hpp"
#include "landtriage/json_util.hpp"

namespace landtriage::registry {

using nlohmann::json;
using namespace json_util;

namespace {

std::string at(std::string_view name, std::size_t i) { return std::string(name) + "[" + std::to_string(i) + "]"; }

geo::Ring parse_ring(const json& coords, const std::string& ctx) {
  if (!coords.is_array()) throw_validation("invalid_geometry", ctx, ctx + ": ring must be an array of positions");
  geo::Ring ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw_validation("invalid_geometry", ctx, ctx + ": position must be [lon, lat]");
    }
    ring.push_back({pos[1].get<double>(), pos[0].get<double>()});
  }
  return ring;
}

geo::GeoPolygon parse_polygon(const json& rings, const std::string& ctx) {
  if (!rings.is_array() || rings.empty()) {
    throw_validation("invalid_geometry", ctx, ctx + ": polygon needs an exterior ring");
  }
  std::vector<geo::Ring> holes;
  for (std::size_t i = 1; i < rings.size(); ++i) holes.push_back(parse_ring(rings[i], ctx));
  try {
    return geo::make_polygon(parse_ring(rings[0], ctx), std::move(holes));
  } catch (const Error& e) {
    throw_validation("invalid_geometry", ctx, ctx + ": " + e.what());
  }
}

Facility parse_facility(const json& j, const std::string& ctx) {
  Facility f;
  f.facility_id = get_string(j, "facility_id", ctx);
  if (f.facility_id.empty()) throw_validation("missing_field", ctx + ".facility_id", "facility_id must be non-empty");
  f.location = geo::make_point(get_number(j, "lat", ctx), get_number(j, "lon", ctx), "location");
  f.kind = get_enum<FacilityKind>(j, "kind", ctx);
  f.animal_units = opt_number(j, "animal_units", ctx);
  f.waste_phase = opt_enum<WastePhase>(j, "waste_phase", ctx).value_or(WastePhase::unknown);
  f.permit_id = opt_string(j, "permit_id", ctx);
  if (f.animal_units) {
    const double au = *f.animal_units;
    if (!(au >= 0.0) || !std::isfinite(au)) {
      throw_validation("invalid_animal_units", ctx + ".animal_units", "animal_units must be >= 0");
    }
    if (f.kind == FacilityKind::cafo && au < kCafoAnimalUnits) {
      throw_validation("invalid_animal_units", ctx + ".animal_units",
                       "facility " + f.facility_id + ": cafo must have at least 1000 animal units");
    }
    if (f.kind == FacilityKind::afo && au >= kCafoAnimalUnits) {
      throw_validation("invalid_animal_units", ctx + ".animal_units",
                       "facility " + f.facility_id + ": afo must have fewer than 1000 animal units");
    }
  }
  return f;
}

Verifier parse_verifier(const json& j, const std::string& ctx) {
  Verifier v;
  v.verifier_id = get_string(j, "verifier_id", ctx);
  if (v.verifier_id.empty()) throw_validation("missing_field", ctx + ".verifier_id", "verifier_id must be non-empty");
  v.home = geo::make_point(get_number(j, "lat", ctx), get_number(j, "lon", ctx), "home");
  v.org = get_enum<Org>(j, "org", ctx);
  v.active = get_bool(j, "active", ctx);
  return v;
}

NmpField parse_field(const json& feature, const std::string& ctx) {
  NmpField f;
  const json& props = require(feature, "properties", ctx);
  f.field_id = get_string(props, "field_id", ctx + ".properties");
  f.permittee_facility_id = get_string(props, "permittee_facility_id", ctx + ".properties");
  const std::string gctx = ctx + ".geometry";
  const json& geom = require(feature, "geometry", ctx);
  const std::string type = get_string(geom, "type", gctx);
  const json& coords = require(geom, "coordinates", gctx);
  if (type == "Polygon") {
    f.parts.push_back(parse_polygon(coords, gctx));
  } else if (type == "MultiPolygon") {
    if (!coords.is_array() || coords.empty()) throw_validation("invalid_geometry", gctx, gctx + ": empty MultiPolygon");
    for (const auto& poly : coords) f.parts.push_back(parse_polygon(poly, gctx));
  } else {
    throw_validation("invalid_geometry", gctx, gctx + ": unsupported geometry type '" + type + "'");
  }
  f.bounds = f.parts.front().bounds();
  for (const auto& p : f.parts) {
    const auto b = p.bounds();
    f.bounds = {std::min(f.bounds.min_lat, b.min_lat), std::min(f.bounds.min_lon, b.min_lon),
                std::max(f.bounds.max_lat, b.max_lat), std::max(f.bounds.max_lon, b.max_lon)};
  }
  return f;
}

template <typename Map>
void insert_unique(Map& index, const std::string& id, std::size_t pos, const char* what) {
  if (!index.emplace(id, pos).second) {
    throw_validation("duplicate_id", what, std::string("duplicate ") + what + " '" + id + "'");
  }
}

const json& array_or_empty(const json& doc, const char* what) {
  static const json kEmpty = json::array();
  if (doc.is_null()) return kEmpty;
  if (!doc.is_array()) throw_validation("invalid_type", what, std::string(what) + " must be a JSON array");
  return doc;
}

}  // namespace

bool field_intersects(const NmpField& field, const geo::GeoBBox& box) {
  if (!field.bounds.intersects(box)) return false;
  return std::any_of(field.parts.begin(), field.parts.end(),
                     [&](const geo::GeoPolygon& p) { return geo::bbox_intersects_polygon(box, p); });
}

geo::GeoBBox radius_bounds(const geo::GeoPoint& c, double radius_m) {
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;
  const double ang = radius_m / geo::kEarthRadiusM;  // angular radius in radians
  const double dlat = ang * kRadToDeg * (1.0 + 1e-9) + 1e-12;
  const double lat0 = std::max(-90.0, c.lat - dlat);
  const double lat1 = std::min(90.0, c.lat + dlat);
  const double coslat = std::cos(c.lat / kRadToDeg);
  if (lat0 <= -90.0 || lat1 >= 90.0 || ang >= std::numbers::pi / 2 || std::sin(ang) >= coslat) {
    return {lat0, -180.0, lat1, 180.0};
  }
  const double dlon = std::asin(std::sin(ang) / coslat) * kRadToDeg * (1.0 + 1e-9) + 1e-12;
  if (c.lon - dlon < -180.0 || c.lon + dlon > 180.0) return {lat0, -180.0, lat1, 180.0};
  return {lat0, c.lon - dlon, lat1, c.lon + dlon};
}

Registry::Registry()
    : field_index_(std::make_unique<detail::GridIndex>()),
      facility_index_(std::make_unique<detail::GridIndex>()),
      verifier_index_(std::make_unique<detail::GridIndex>()),
      source_({{"facilities", json::array()},
               {"fields", {{"type", "FeatureCollection"}, {"features", json::array()}}},
               {"verifiers", json::array()}}) {}
Registry::~Registry() = default;
Registry::Registry(Registry&&) noexcept = default;
Registry& Registry::operator=(Registry&&) noexcept = default;

Registry Registry::load(const json& facilities, const json& fields, const json& verifiers) {
  Registry r;
  const json& fac_arr = array_or_empty(facilities, "facilities");
  for (std::size_t i = 0; i < fac_arr.size(); ++i) {
    r.facilities_.push_back(parse_facility(fac_arr[i], at("facilities", i)));
    insert_unique(r.facility_by_id_, r.facilities_.back().facility_id, i, "facility_id");
  }
  const json& ver_arr = array_or_empty(verifiers, "verifiers");
  for (std::size_t i = 0; i < ver_arr.size(); ++i) {
    r.verifiers_.push_back(parse_verifier(ver_arr[i], at("verifiers", i)));
    insert_unique(r.verifier_by_id_, r.verifiers_.back().verifier_id, i, "verifier_id");
  }
  json features = json::array();
  if (!fields.is_null()) {
    if (!fields.is_object() || fields.value("type", "") != "FeatureCollection") {
      throw_validation("invalid_type", "fields", "fields must be a GeoJSON FeatureCollection");
    }
    features = fields.value("features", json::array());
    if (!features.is_array()) throw_validation("invalid_type", "fields.features", "features must be an array");
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::string ctx = at("features", i);
    NmpField f = parse_field(features[i], ctx);
    if (!r.facility_by_id_.count(f.permittee_facility_id)) {
      throw_validation("dangling_reference", ctx + ".properties.permittee_facility_id",
                       "field " + f.field_id + " references unknown facility '" + f.permittee_facility_id + "'");
    }
    r.fields_.push_back(std::move(f));
    insert_unique(r.field_by_id_, r.fields_.back().field_id, i, "field_id");
  }

  for (std::size_t i = 0; i < r.fields_.size(); ++i) r.field_index_->insert(i, r.fields_[i].bounds);
  for (std::size_t i = 0; i < r.facilities_.size(); ++i) {
    const auto& p = r.facilities_[i].location;
    r.facility_index_->insert(i, {p.lat, p.lon, p.lat, p.lon});
  }
  for (std::size_t i = 0; i < r.verifiers_.size(); ++i) {
    const auto& p = r.verifiers_[i].home;
    r.verifier_index_->insert(i, {p.lat, p.lon, p.lat, p.lon});
  }
  r.source_ = {{"facilities", fac_arr}, {"fields", {{"type", "FeatureCollection"}, {"features", features}}},
               {"verifiers", ver_arr}};
  return r;
}

const Facility* Registry::find_facility(const std::string& id) const {
  auto it = facility_by_id_.find(id);
  return it == facility_by_id_.end() ? nullptr : &facilities_[it->second];
}

const NmpField* Registry::find_field(const std::string& id) const {
  auto it = field_by_id_.find(id);
  return it == field_by_id_.end() ? nullptr : &fields_[it->second];
}

const Verifier* Registry::find_verifier(const std::string& id) const {
  auto it = verifier_by_id_.find(id);
  return it == verifier_by_id_.end() ? nullptr : &verifiers_[it->second];
}

std::vector<const NmpField*> Registry::fields_intersecting(const geo::GeoBBox& box) const {
  std::vector<const NmpField*> out;
  for (std::size_t i : field_index_->candidates(box)) {
    if (field_intersects(fields_[i], box)) out.push_back(&fields_[i]);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->field_id < b->field_id; });
  return out;
}

std::vector<VerifierHit> Registry::verifiers_within(const geo::GeoPoint& pt, double radius_m) const {
  std::vector<VerifierHit> out;
  if (!(radius_m >= 0.0)) return out;
  for (std::size_t i : verifier_index_->candidates(radius_bounds(pt, radius_m))) {
    const Verifier& v = verifiers_[i];
    if (!v.active) continue;
    const double d = geo::haversine_m(pt, v.home);
    if (d <= radius_m) out.push_back({&v, d});
  }
  std::sort(out.begin(), out.end(), [](const VerifierHit& a, const VerifierHit& b) {
    if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
    return a.verifier->verifier_id < b.verifier->verifier_id;
  });
  return out;
}

std::optional<FacilityHit> Registry::nearest_facility(const geo::GeoPoint& pt) const {
  std::optional<FacilityHit> best;
  for (const auto& f : facilities_) {
    const double d = geo::haversine_m(pt, f.location);
    if (!best || d < best->distance_m || (d == best->distance_m && f.facility_id < best->facility->facility_id)) {
      best = FacilityHit{&f, d};
    }
  }
  return best;
}

bool Registry::in_any_aoi(const geo::GeoPoint& pt, double aoi_side_m) const {
  // An AOI containing pt has its center within half a side (plus the cos-lat stretch) of pt.
  const double reach_lat = aoi_side_m / 2.0 / geo::kMetersPerDegree;
  const double coslat = std::cos(std::min(89.0, std::abs(pt.lat) + reach_lat) * std::numbers::pi / 180.0);
  const double reach_lon = reach_lat / std::max(0.0175, coslat);
  const geo::GeoBBox q{pt.lat - reach_lat - 1e-9, pt.lon - reach_lon - 1e-9, pt.lat + reach_lat + 1e-9,
                       pt.lon + reach_lon + 1e-9};
  for (std::size_t i : facility_index_->candidates(q)) {
    const auto& loc = facilities_[i].location;
    if (std::abs(loc.lat) > 89.0) continue;
    if (geo::make_aoi(loc, aoi_side_m).contains(pt)) return true;
  }
  return false;
}

}  // namespace landtriage::registry
