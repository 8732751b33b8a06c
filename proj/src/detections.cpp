#include "landtriage/detections.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "landtriage/error.hpp"
#include "landtriage/json_util.hpp"

namespace landtriage::detections {

using nlohmann::json;

std::vector<std::string> validate_run(const ModelRun& run) {
  if (run.run_id.empty()) throw_validation("missing_field", "run_id", "run_id must be non-empty");
  if (run.dispatched_on < run.imagery_date) {
    throw_validation("dispatch_before_capture", "dispatched_on", "dispatched_on precedes imagery_date");
  }
  std::vector<std::string> warnings;
  const int lag = days_between(run.imagery_date, run.dispatched_on);
  if (lag > kMaxDispatchLagDays) {
    warnings.push_back("run " + run.run_id + " dispatched " + std::to_string(lag) + " days after capture");
  }
  return warnings;
}

Detection from_record(const json& j, const std::string& run_id) {
  using namespace json_util;
  Detection d;
  d.detection_id = get_string(j, "detection_id", "");
  if (d.detection_id.empty()) throw_validation("missing_field", "detection_id", "detection_id must be non-empty");
  d.run_id = get_string(j, "run_id", "");
  if (d.run_id != run_id) throw_validation("run_mismatch", "run_id", "record run_id does not match batch run");
  d.score = get_number(j, "score", "");
  if (!(d.score >= 0.0 && d.score <= 1.0)) throw_validation("score_out_of_range", "score", "score outside [0,1]");
  const json& b = require(j, "bbox", "");
  d.bbox = geo::make_bbox(get_number(b, "min_lat", "bbox"), get_number(b, "min_lon", "bbox"),
                          get_number(b, "max_lat", "bbox"), get_number(b, "max_lon", "bbox"));
  d.image_uri = get_string(j, "image_uri", "");
  d.summer_image_uri = opt_string(j, "summer_image_uri", "");
  return d;
}

ParsedBatch parse_detection_lines(std::string_view text, const std::string& run_id,
                                  const std::function<bool(const std::string&)>& is_known_id) {
  ParsedBatch out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      out.rejected.push_back({line_no, "malformed_json", ""});
      continue;
    }
    std::string id = j.contains("detection_id") && j["detection_id"].is_string() ? j["detection_id"].get<std::string>() : "";
    try {
      Detection d = from_record(j, run_id);
      if (seen.count(d.detection_id) || is_known_id(d.detection_id)) {
        out.rejected.push_back({line_no, "duplicate_detection_id", d.detection_id});
        continue;
      }
      seen.insert(d.detection_id);
      out.accepted.push_back(std::move(d));
    } catch (const Error& e) {
      out.rejected.push_back({line_no, e.code(), id});
    }
  }
  return out;
}

json to_record(const Detection& d) {
  json j{{"detection_id", d.detection_id},
         {"run_id", d.run_id},
         {"score", d.score},
         {"bbox", {{"min_lat", d.bbox.min_lat}, {"min_lon", d.bbox.min_lon}, {"max_lat", d.bbox.max_lat}, {"max_lon", d.bbox.max_lon}}},
         {"image_uri", d.image_uri}};
  if (d.summer_image_uri) j["summer_image_uri"] = *d.summer_image_uri;
  return j;
}

std::vector<DuplicatePair> dedupe(std::span<const Detection> run_a, std::span<const Detection> run_b,
                                  double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw_validation("invalid_threshold", "iou_threshold", "iou_threshold must be in (0, 1]");
  }
  std::vector<DuplicatePair> out;
  for (const auto& a : run_a) {
    for (const auto& b : run_b) {
      if (!a.bbox.intersects(b.bbox)) continue;
      const double iou = geo::bbox_iou(a.bbox, b.bbox);
      if (iou >= iou_threshold) out.push_back({a.detection_id, b.detection_id, iou});
    }
  }
  std::sort(out.begin(), out.end(), [](const DuplicatePair& x, const DuplicatePair& y) {
    return std::tie(x.detection_a, x.detection_b) < std::tie(y.detection_a, y.detection_b);
  });
  return out;
}

IncidentalBreakdown categorize_incidentals(std::span<const IncidentalReport> reports,
                                           const registry::Registry& reg,
                                           std::span<const DatedDetection> detections,
                                           const IncidentalParams& params) {
  IncidentalBreakdown out;
  for (const auto& r : reports) {
    IncidentalCategory cat;
    if (!r.location) {
      cat = IncidentalCategory::non_geocodable;
    } else {
      bool below = false;
      bool above = false;
      for (const auto& dd : detections) {
        if (std::abs(days_between(dd.imagery_date, r.observed_on)) > params.match_window_days) continue;
        if (!geo::expand_m(dd.detection->bbox, params.match_radius_m).contains(*r.location)) continue;
        (dd.detection->score >= params.score_floor ? above : below) = true;
      }
      if (above) {
        cat = IncidentalCategory::detected;
      } else if (below) {
        cat = IncidentalCategory::detected_below_threshold;
      } else if (!reg.in_any_aoi(*r.location, params.aoi_side_m)) {
        cat = IncidentalCategory::outside_aoi;
      } else {
        cat = IncidentalCategory::missed_in_aoi;
      }
    }
    switch (cat) {
      case IncidentalCategory::non_geocodable: ++out.non_geocodable; break;
      case IncidentalCategory::detected_below_threshold: ++out.detected_below_threshold; break;
      case IncidentalCategory::outside_aoi: ++out.outside_aoi; break;
      case IncidentalCategory::missed_in_aoi: ++out.missed_in_aoi; break;
      case IncidentalCategory::detected: ++out.detected; break;
    }
    out.per_report.emplace_back(r.report_id, cat);
  }
  return out;
}

}  // namespace landtriage::detections
