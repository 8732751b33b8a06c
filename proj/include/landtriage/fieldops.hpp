#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "landtriage/compliance.hpp"
#include "landtriage/date.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/routing.hpp"

namespace landtriage::fieldops {

enum class ReporterConfidence { high, medium, low };
constexpr auto enum_table(ReporterConfidence) {
  using P = std::pair<ReporterConfidence, std::string_view>;
  return std::array{P{ReporterConfidence::high, "high"}, P{ReporterConfidence::medium, "medium"},
                    P{ReporterConfidence::low, "low"}};
}

struct FieldResponse {
  std::string response_id;
  std::string assignment_id;
  Date visited_on;
  bool location_visible = false;
  std::optional<bool> manure_present;  // absent iff not visible
  std::optional<ReporterConfidence> reporter_confidence;
  std::string notes;
  std::vector<std::string> photo_uris;
};

struct Determination {
  std::string determination_id;
  std::string assignment_id;
  Date decided_on;
  bool manure_present = false;
  std::optional<compliance::Compliance> compliance;  // absent iff no manure
  std::string method_notes;
  // Facts the ruling was based on, when recorded.
  std::optional<compliance::SpreadEvent> event;
};

// Checks the response invariants against its assignment. Throws validation Error.
void validate_response(const FieldResponse& r, const routing::Assignment& a);
void validate_determination(const Determination& d, const routing::Assignment& a);

// Whole days from dispatch to visit.
int latency_days(const routing::Assignment& a, const FieldResponse& r);

inline constexpr std::string_view kSummerImageMissing = "summer_image_missing";

struct PacketManifest {
  std::string assignment_id;
  std::string title;
  std::string detection_image_uri;
  std::optional<std::string> summer_image_uri;
  std::string static_map_uri;
  bool north_arrow = true;
  Date capture_date;
  double centroid_lat = 0.0;  // rounded to 6 decimals
  double centroid_lon = 0.0;
  geo::GeoBBox bbox;
  std::vector<std::string> notes;
};

PacketManifest build_packet(const routing::Assignment& a, const detections::Detection& d,
                            const detections::ModelRun& run);

// Coordinates printed with six decimals, e.g. "43.123456".
std::string format_coord(double v);

struct CsvRowError {
  std::size_t line = 0;
  std::string reason;
  std::string field;
};

struct ParsedResponses {
  std::vector<FieldResponse> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
  std::vector<CsvRowError> errors;
};

// Bulk import; header must name assignment_id, visited_on, location_visible,
// manure_present, reporter_confidence, notes. Cross-record checks are left to the caller.
ParsedResponses parse_response_csv(std::string_view text);

// Minimal RFC 4180 splitter shared with other CSV readers.
std::vector<std::vector<std::string>> split_csv(std::string_view text);

}  // namespace landtriage::fieldops
