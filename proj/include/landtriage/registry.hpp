#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "landtriage/enums.hpp"
#include "landtriage/geo.hpp"

namespace landtriage {

enum class Org { wdnr, elpc };
constexpr auto enum_table(Org) {
  return std::array{std::pair{Org::wdnr, std::string_view{"wdnr"}}, std::pair{Org::elpc, std::string_view{"elpc"}}};
}

}  // namespace landtriage

namespace landtriage::detail {
class GridIndex;
}

namespace landtriage::registry {

enum class FacilityKind { cafo, cafo_satellite, afo, unknown };
constexpr auto enum_table(FacilityKind) {
  using P = std::pair<FacilityKind, std::string_view>;
  return std::array{P{FacilityKind::cafo, "cafo"}, P{FacilityKind::cafo_satellite, "cafo_satellite"},
                    P{FacilityKind::afo, "afo"}, P{FacilityKind::unknown, "unknown"}};
}

enum class WastePhase { liquid, solid, both, unknown };
constexpr auto enum_table(WastePhase) {
  using P = std::pair<WastePhase, std::string_view>;
  return std::array{P{WastePhase::liquid, "liquid"}, P{WastePhase::solid, "solid"}, P{WastePhase::both, "both"},
                    P{WastePhase::unknown, "unknown"}};
}

// Permitting threshold separating CAFOs from AFOs.
inline constexpr double kCafoAnimalUnits = 1000.0;

struct Facility {
  std::string facility_id;
  geo::GeoPoint location;
  FacilityKind kind = FacilityKind::unknown;
  std::optional<double> animal_units;
  WastePhase waste_phase = WastePhase::unknown;
  std::optional<std::string> permit_id;
};

// A permitted manure-spreading field. MultiPolygon features keep every part.
struct NmpField {
  std::string field_id;
  std::vector<geo::GeoPolygon> parts;
  std::string permittee_facility_id;
  geo::GeoBBox bounds;
};

struct Verifier {
  std::string verifier_id;
  geo::GeoPoint home;
  Org org = Org::elpc;
  bool active = true;
};

struct VerifierHit {
  const Verifier* verifier;
  double distance_m;
};

struct FacilityHit {
  const Facility* facility;
  double distance_m;
};

bool field_intersects(const NmpField& field, const geo::GeoBBox& box);

// Immutable once loaded; lookups are safe from any number of threads.
class Registry {
 public:
  Registry();
  ~Registry();
  Registry(Registry&&) noexcept;
  Registry& operator=(Registry&&) noexcept;

  // facilities: JSON array; fields: GeoJSON FeatureCollection; verifiers: JSON array.
  // Throws validation Error on duplicates, dangling permittees and bad geometry.
  static Registry load(const nlohmann::json& facilities, const nlohmann::json& fields,
                       const nlohmann::json& verifiers);

  const std::vector<Facility>& facilities() const { return facilities_; }
  const std::vector<NmpField>& fields() const { return fields_; }
  const std::vector<Verifier>& verifiers() const { return verifiers_; }

  const Facility* find_facility(const std::string& id) const;
  const NmpField* find_field(const std::string& id) const;
  const Verifier* find_verifier(const std::string& id) const;

  // Ordered by field_id.
  std::vector<const NmpField*> fields_intersecting(const geo::GeoBBox& box) const;
  // Active verifiers within radius (inclusive), ascending distance then verifier_id.
  std::vector<VerifierHit> verifiers_within(const geo::GeoPoint& pt, double radius_m) const;
  std::optional<FacilityHit> nearest_facility(const geo::GeoPoint& pt) const;
  // True when pt lies in the square AOI of any facility.
  bool in_any_aoi(const geo::GeoPoint& pt, double aoi_side_m) const;

  // The documents the registry was loaded from, for persistence.
  const nlohmann::json& source() const { return source_; }

 private:
  std::vector<Facility> facilities_;
  std::vector<NmpField> fields_;
  std::vector<Verifier> verifiers_;
  std::map<std::string, std::size_t, std::less<>> facility_by_id_;
  std::map<std::string, std::size_t, std::less<>> field_by_id_;
  std::map<std::string, std::size_t, std::less<>> verifier_by_id_;
  std::unique_ptr<detail::GridIndex> field_index_;
  std::unique_ptr<detail::GridIndex> facility_index_;
  std::unique_ptr<detail::GridIndex> verifier_index_;
  nlohmann::json source_;
};

// Degree-space bounding box covering every point within radius_m of center.
geo::GeoBBox radius_bounds(const geo::GeoPoint& center, double radius_m);

}  // namespace landtriage::registry
