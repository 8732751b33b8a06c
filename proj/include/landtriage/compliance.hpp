#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "landtriage/date.hpp"
#include "landtriage/enums.hpp"

namespace landtriage::compliance {

enum class EntityClass { cafo, afo, unknown };
constexpr auto enum_table(EntityClass) {
  using P = std::pair<EntityClass, std::string_view>;
  return std::array{P{EntityClass::cafo, "cafo"}, P{EntityClass::afo, "afo"}, P{EntityClass::unknown, "unknown"}};
}

enum class Phase { liquid, solid, unknown };
constexpr auto enum_table(Phase) {
  using P = std::pair<Phase, std::string_view>;
  return std::array{P{Phase::liquid, "liquid"}, P{Phase::solid, "solid"}, P{Phase::unknown, "unknown"}};
}

enum class Surface { snow_covered, frozen, bare_unfrozen, unknown };
constexpr auto enum_table(Surface) {
  using P = std::pair<Surface, std::string_view>;
  return std::array{P{Surface::snow_covered, "snow_covered"}, P{Surface::frozen, "frozen"},
                    P{Surface::bare_unfrozen, "bare_unfrozen"}, P{Surface::unknown, "unknown"}};
}

enum class Compliance { violation, compliant_pre_window, compliant_unregulated_entity, compliant_other, indeterminate };
constexpr auto enum_table(Compliance) {
  using P = std::pair<Compliance, std::string_view>;
  return std::array{P{Compliance::violation, "violation"}, P{Compliance::compliant_pre_window, "compliant_pre_window"},
                    P{Compliance::compliant_unregulated_entity, "compliant_unregulated_entity"},
                    P{Compliance::compliant_other, "compliant_other"}, P{Compliance::indeterminate, "indeterminate"}};
}

struct SpreadEvent {
  Date event_date;
  EntityClass entity_class = EntityClass::unknown;
  std::optional<double> animal_units;
  Phase waste_phase = Phase::unknown;
  Surface surface = Surface::unknown;
  bool emergency_approved = false;
  bool claimed_pre_window = false;
};

struct RuleWindow {
  Date start;
  Date end;
  double animal_unit_threshold = 1000.0;

  // Feb 1 through Mar 31 of `year`.
  static RuleWindow winter(int year, double threshold = 1000.0);
};

// Month/day form of the window, resolved against the year of each event.
struct SeasonalWindow {
  unsigned start_month = 2, start_day = 1;
  unsigned end_month = 3, end_day = 31;
  double animal_unit_threshold = 1000.0;

  RuleWindow for_date(Date d) const;
};

void validate(const RuleWindow& w);
// Checks animal_units against entity_class at the window threshold.
void validate(const SpreadEvent& e, const RuleWindow& w);

// Total decision procedure:
//  1. outside [start, end]                                   -> compliant_pre_window
//  2. afo, or animal_units below threshold                   -> compliant_unregulated_entity
//  3. emergency approval                                     -> compliant_other
//  4. unknown entity, or neither phase nor surface known     -> indeterminate
//  5. cafo in window: liquid -> violation; solid on snow or frozen ground -> violation;
//     solid on bare unfrozen ground -> compliant_other; unknown phase on snow or frozen
//     ground -> violation (either phase would be); anything else -> indeterminate
Compliance classify(const SpreadEvent& e, const RuleWindow& w);

struct Observation {
  Date observed_on;
  bool manure_visible = false;
  bool usable = true;
};

enum class Corroboration { pre_window, boundary, in_window, unsure };
constexpr auto enum_table(Corroboration) {
  using P = std::pair<Corroboration, std::string_view>;
  return std::array{P{Corroboration::pre_window, "pre_window"}, P{Corroboration::boundary, "boundary"},
                    P{Corroboration::in_window, "in_window"}, P{Corroboration::unsure, "unsure"}};
}

inline constexpr int kDefaultBoundaryDays = 2;

// Dates the first usable sighting F and the last usable clear image L before it.
// Throws validation Error when observations are not sorted by date.
Corroboration corroborate_pre_window(std::span<const Observation> obs, const RuleWindow& w,
                                     int boundary_days = kDefaultBoundaryDays);

// (pre_window + boundary) / total. Throws on empty input.
double substantiation_rate(std::span<const Corroboration> results);

}  // namespace landtriage::compliance
