#include "landtriage/fieldops.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "landtriage/error.hpp"

namespace landtriage::fieldops {

void validate_response(const FieldResponse& r, const routing::Assignment& a) {
  if (a.org != Org::elpc) {
    throw_validation("wrong_org", "assignment_id", "field responses are only taken for elpc assignments");
  }
  if (!r.location_visible && r.manure_present) {
    throw_validation("manure_without_visibility", "manure_present",
                     "manure_present must be absent when the location was not visible");
  }
  if (r.location_visible && !r.manure_present) {
    throw_validation("missing_field", "manure_present", "manure_present is required when the location was visible");
  }
  if (r.visited_on < a.dispatched_on) {
    throw_validation("visit_before_dispatch", "visited_on", "visited_on precedes the assignment dispatch date");
  }
}

void validate_determination(const Determination& d, const routing::Assignment& a) {
  if (a.org != Org::wdnr) {
    throw_validation("wrong_org", "assignment_id", "determinations are only taken for wdnr assignments");
  }
  if (!d.manure_present && d.compliance) {
    throw_validation("compliance_without_manure", "compliance", "compliance must be absent when no manure was present");
  }
  if (d.manure_present && !d.compliance) {
    throw_validation("missing_field", "compliance", "compliance is required when manure was present");
  }
}

int latency_days(const routing::Assignment& a, const FieldResponse& r) { return days_between(a.dispatched_on, r.visited_on); }

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

PacketManifest build_packet(const routing::Assignment& a, const detections::Detection& d,
                            const detections::ModelRun& run) {
  PacketManifest m;
  m.assignment_id = a.assignment_id;
  m.capture_date = run.imagery_date;
  m.title = "Detection " + d.detection_id + " captured " + format_date(run.imagery_date);
  m.detection_image_uri = d.image_uri;
  m.summer_image_uri = d.summer_image_uri;
  if (!m.summer_image_uri || m.summer_image_uri->empty()) {
    m.summer_image_uri.reset();
    m.notes.emplace_back(kSummerImageMissing);
  }
  const auto c = d.centroid();
  m.centroid_lat = std::round(c.lat * 1e6) / 1e6;
  m.centroid_lon = std::round(c.lon * 1e6) / 1e6;
  m.static_map_uri = "geo:" + format_coord(c.lat) + "," + format_coord(c.lon) + "?z=15";
  m.bbox = d.bbox;
  m.north_arrow = true;
  return m;
}

std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_has_content = true;
        break;
      case ',':
        row.push_back(std::move(cell));
        cell.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !cell.empty()) {
          row.push_back(std::move(cell));
          rows.push_back(std::move(row));
        } else {
          rows.emplace_back();
        }
        row.clear();
        cell.clear();
        row_has_content = false;
        break;
      default:
        cell += c;
        row_has_content = true;
    }
  }
  if (row_has_content || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::optional<bool> parse_bool_cell(const std::string& s, const char* field) {
  if (s.empty()) return std::nullopt;
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw_validation("invalid_type", field, std::string(field) + ": expected true/false");
}

}  // namespace

ParsedResponses parse_response_csv(std::string_view text) {
  static const char* kColumns[] = {"assignment_id", "visited_on", "location_visible",
                                   "manure_present", "reporter_confidence", "notes"};
  ParsedResponses out;
  auto rows = split_csv(text);
  if (rows.empty()) return out;
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
  for (const char* name : kColumns) {
    if (!col.count(name)) throw_validation("missing_column", name, std::string("CSV header lacks column '") + name + "'");
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.empty()) continue;
    auto cell = [&](const char* name) -> std::string {
      std::size_t i = col[name];
      return i < row.size() ? row[i] : std::string{};
    };
    try {
      FieldResponse resp;
      resp.assignment_id = cell("assignment_id");
      if (resp.assignment_id.empty()) throw_validation("missing_field", "assignment_id", "assignment_id is required");
      resp.response_id = "resp-" + resp.assignment_id;
      resp.visited_on = parse_date(cell("visited_on"), "visited_on");
      auto visible = parse_bool_cell(cell("location_visible"), "location_visible");
      if (!visible) throw_validation("missing_field", "location_visible", "location_visible is required");
      resp.location_visible = *visible;
      resp.manure_present = parse_bool_cell(cell("manure_present"), "manure_present");
      const std::string conf = cell("reporter_confidence");
      if (!conf.empty()) resp.reporter_confidence = parse_enum<ReporterConfidence>(conf, "reporter_confidence");
      resp.notes = cell("notes");
      out.rows.push_back(std::move(resp));
      out.lines.push_back(line);
    } catch (const Error& e) {
      out.errors.push_back({line, e.code(), e.field()});
    }
  }
  return out;
}

}  // namespace landtriage::fieldops
