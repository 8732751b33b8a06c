#include "landtriage/compliance.hpp"

#include <algorithm>
#include <cmath>

#include "landtriage/error.hpp"

namespace landtriage::compliance {

RuleWindow RuleWindow::winter(int year, double threshold) {
  return {make_date(year, 2, 1), make_date(year, 3, 31), threshold};
}

RuleWindow SeasonalWindow::for_date(Date d) const {
  const int year = static_cast<int>(std::chrono::year_month_day{d}.year());
  return {make_date(year, start_month, start_day), make_date(year, end_month, end_day), animal_unit_threshold};
}

void validate(const RuleWindow& w) {
  if (w.end < w.start) throw_validation("invalid_window", "rule_window", "window end precedes start");
  if (!(w.animal_unit_threshold > 0.0)) {
    throw_validation("invalid_threshold", "animal_unit_threshold", "animal-unit threshold must be positive");
  }
}

void validate(const SpreadEvent& e, const RuleWindow& w) {
  if (!e.animal_units) return;
  const double au = *e.animal_units;
  if (!(au >= 0.0) || !std::isfinite(au)) {
    throw_validation("invalid_animal_units", "animal_units", "animal_units must be >= 0");
  }
  if (e.entity_class == EntityClass::cafo && au < w.animal_unit_threshold) {
    throw_validation("invalid_animal_units", "animal_units", "cafo animal_units below the permitting threshold");
  }
  if (e.entity_class == EntityClass::afo && au >= w.animal_unit_threshold) {
    throw_validation("invalid_animal_units", "animal_units", "afo animal_units at or above the permitting threshold");
  }
}

Compliance classify(const SpreadEvent& e, const RuleWindow& w) {
  if (e.event_date < w.start || e.event_date > w.end) return Compliance::compliant_pre_window;
  if (e.entity_class == EntityClass::afo || (e.animal_units && *e.animal_units < w.animal_unit_threshold)) {
    return Compliance::compliant_unregulated_entity;
  }
  if (e.emergency_approved) return Compliance::compliant_other;
  if (e.entity_class == EntityClass::unknown) return Compliance::indeterminate;
  if (e.waste_phase == Phase::unknown && e.surface == Surface::unknown) return Compliance::indeterminate;

  switch (e.waste_phase) {
    case Phase::liquid:
      return Compliance::violation;
    case Phase::solid:
      switch (e.surface) {
        case Surface::snow_covered:
        case Surface::frozen:
          return Compliance::violation;
        case Surface::bare_unfrozen:
          return Compliance::compliant_other;
        case Surface::unknown:
          return Compliance::indeterminate;
      }
      break;
    case Phase::unknown:
      // Both phases are prohibited on snow and frozen ground, so the phase does not matter there.
      if (e.surface == Surface::snow_covered || e.surface == Surface::frozen) return Compliance::violation;
      break;
  }
  return Compliance::indeterminate;
}

Corroboration corroborate_pre_window(std::span<const Observation> obs, const RuleWindow& w, int boundary_days) {
  if (!std::is_sorted(obs.begin(), obs.end(),
                      [](const Observation& a, const Observation& b) { return a.observed_on < b.observed_on; })) {
    throw_validation("unsorted_observations", "observations", "observations must be sorted by date");
  }
  std::optional<Date> first_positive;
  for (const auto& o : obs) {
    if (o.usable && o.manure_visible) {
      first_positive = o.observed_on;
      break;
    }
  }
  if (!first_positive) return Corroboration::unsure;
  if (*first_positive < w.start) return Corroboration::pre_window;

  std::optional<Date> last_negative;
  for (const auto& o : obs) {
    if (o.observed_on >= *first_positive) break;
    if (o.usable && !o.manure_visible) last_negative = o.observed_on;
  }
  if (!last_negative) return Corroboration::unsure;
  if (*last_negative >= w.start) return Corroboration::in_window;
  if (*last_negative >= add_days(w.start, -boundary_days)) return Corroboration::boundary;
  return Corroboration::unsure;
}

double substantiation_rate(std::span<const Corroboration> results) {
  if (results.empty()) throw_validation("empty_input", "results", "substantiation rate needs at least one result");
  const auto hits = std::count_if(results.begin(), results.end(), [](Corroboration c) {
    return c == Corroboration::pre_window || c == Corroboration::boundary;
  });
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

}  // namespace landtriage::compliance
