#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "landtriage/date.hpp"
#include "landtriage/geo.hpp"
#include "landtriage/registry.hpp"

namespace landtriage::detections {

// Dispatch later than this after capture is suspicious but allowed.
inline constexpr int kMaxDispatchLagDays = 3;

struct ModelRun {
  std::string run_id;
  Date imagery_date;
  Date dispatched_on;
};

// Throws when dispatched_on precedes imagery_date; returns warnings otherwise.
std::vector<std::string> validate_run(const ModelRun& run);

struct Detection {
  std::string detection_id;
  std::string run_id;
  geo::GeoBBox bbox;
  double score = 0.0;
  std::string image_uri;
  std::optional<std::string> summer_image_uri;
  std::optional<std::string> nearest_facility_id;

  geo::GeoPoint centroid() const { return bbox.center(); }
};

struct RecordError {
  std::size_t line = 0;  // 1-based
  std::string reason;
  std::string detection_id;
};

struct ParsedBatch {
  std::vector<Detection> accepted;
  std::vector<RecordError> rejected;
};

// Parses line-delimited detection records for `run_id`. Blank lines are skipped.
// `is_known_id` reports ids already persisted; ids repeated within the batch are
// rejected as duplicates too.
ParsedBatch parse_detection_lines(std::string_view text, const std::string& run_id,
                                  const std::function<bool(const std::string&)>& is_known_id);

// Wire form of one record; from_record(to_record(d), d.run_id) round-trips.
nlohmann::json to_record(const Detection& d);
// Parses one wire record. Throws validation Error carrying the rejection reason code.
Detection from_record(const nlohmann::json& j, const std::string& run_id);

struct DuplicatePair {
  std::string detection_a;
  std::string detection_b;
  double iou;
};

// Flags pairs across two runs whose IoU reaches the threshold; nothing is removed.
std::vector<DuplicatePair> dedupe(std::span<const Detection> run_a, std::span<const Detection> run_b,
                                  double iou_threshold);

struct IncidentalReport {
  std::string report_id;
  std::string reporter_verifier_id;
  Date observed_on;
  std::optional<geo::GeoPoint> location;
  std::string notes;
};

enum class IncidentalCategory { non_geocodable, detected_below_threshold, outside_aoi, missed_in_aoi, detected };
constexpr auto enum_table(IncidentalCategory) {
  using P = std::pair<IncidentalCategory, std::string_view>;
  return std::array{P{IncidentalCategory::non_geocodable, "non_geocodable"},
                    P{IncidentalCategory::detected_below_threshold, "detected_below_threshold"},
                    P{IncidentalCategory::outside_aoi, "outside_aoi"},
                    P{IncidentalCategory::missed_in_aoi, "missed_in_aoi"},
                    P{IncidentalCategory::detected, "detected"}};
}

struct DatedDetection {
  const Detection* detection;
  Date imagery_date;
};

struct IncidentalParams {
  double score_floor = 0.2;
  double aoi_side_m = geo::kDefaultAoiSideM;
  // A detection matches a report when the report point lies within its box grown by this margin.
  double match_radius_m = 250.0;
  // ... and the capture date is within this many days of the observation.
  int match_window_days = 7;
};

struct IncidentalBreakdown {
  std::size_t non_geocodable = 0;
  std::size_t detected_below_threshold = 0;
  std::size_t outside_aoi = 0;
  std::size_t missed_in_aoi = 0;
  // Reports the model caught at or above the floor; not a miss.
  std::size_t detected = 0;
  std::vector<std::pair<std::string, IncidentalCategory>> per_report;

  std::size_t total() const {
    return non_geocodable + detected_below_threshold + outside_aoi + missed_in_aoi + detected;
  }
};

// A match at or above the floor is `detected`; otherwise the first matching miss
// category wins in order: non_geocodable, detected_below_threshold, outside_aoi, missed_in_aoi.
IncidentalBreakdown categorize_incidentals(std::span<const IncidentalReport> reports,
                                           const registry::Registry& reg,
                                           std::span<const DatedDetection> detections,
                                           const IncidentalParams& params);

}  // namespace landtriage::detections
