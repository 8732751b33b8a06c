#include "landtriage/json_codec.hpp"

#include "landtriage/error.hpp"
#include "landtriage/json_util.hpp"

namespace landtriage::codec {

using namespace json_util;

namespace {

json date_or_null(const std::optional<Date>& d) { return d ? json(format_date(*d)) : json(nullptr); }

template <typename E>
json enum_or_null(const std::optional<E>& e) {
  return e ? json(std::string(to_string(*e))) : json(nullptr);
}

std::vector<std::string> string_list(const json& j, std::string_view key, std::string_view ctx) {
  std::vector<std::string> out;
  const json* v = find(j, key);
  if (!v) return out;
  if (!v->is_array()) throw_validation("invalid_type", path(ctx, key), path(ctx, key) + " must be an array");
  for (const auto& e : *v) {
    if (!e.is_string()) throw_validation("invalid_type", path(ctx, key), path(ctx, key) + " must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

json to_json(const geo::GeoBBox& b) {
  return {{"min_lat", b.min_lat}, {"min_lon", b.min_lon}, {"max_lat", b.max_lat}, {"max_lon", b.max_lon}};
}

geo::GeoBBox bbox_from_json(const json& j, std::string_view ctx) {
  return geo::make_bbox(get_number(j, "min_lat", ctx), get_number(j, "min_lon", ctx), get_number(j, "max_lat", ctx),
                        get_number(j, "max_lon", ctx));
}

json to_json(const detections::ModelRun& r) {
  return {{"run_id", r.run_id}, {"imagery_date", format_date(r.imagery_date)}, {"dispatched_on", format_date(r.dispatched_on)}};
}

detections::ModelRun run_from_json(const json& j) {
  detections::ModelRun r;
  r.run_id = get_string(j, "run_id", "");
  r.imagery_date = get_date(j, "imagery_date", "");
  r.dispatched_on = get_date(j, "dispatched_on", "");
  return r;
}

json to_json(const routing::ScreeningItem& s) {
  return {{"detection_id", s.detection_id},
          {"run_id", s.run_id},
          {"score", s.score},
          {"queued_on", format_date(s.queued_on)},
          {"status", to_string(s.status)},
          {"reject_reason", enum_or_null(s.reject_reason)},
          {"screener_note", s.screener_note},
          {"decided_on", date_or_null(s.decided_on)},
          {"field_ids", s.field_ids}};
}

routing::ScreeningItem screening_from_json(const json& j) {
  routing::ScreeningItem s;
  s.detection_id = get_string(j, "detection_id", "");
  s.run_id = get_string(j, "run_id", "");
  s.score = get_number(j, "score", "");
  s.queued_on = get_date(j, "queued_on", "");
  s.status = get_enum<routing::ScreeningStatus>(j, "status", "");
  s.reject_reason = opt_enum<routing::RejectReason>(j, "reject_reason", "");
  s.screener_note = opt_string(j, "screener_note", "").value_or("");
  s.decided_on = opt_date(j, "decided_on", "");
  s.field_ids = string_list(j, "field_ids", "");
  return s;
}

json to_json(const routing::Assignment& a) {
  return {{"assignment_id", a.assignment_id},
          {"detection_id", a.detection_id},
          {"run_id", a.run_id},
          {"org", to_string(a.org)},
          {"verifier_id", opt(a.verifier_id)},
          {"region_tag", opt(a.region_tag)},
          {"dispatched_on", format_date(a.dispatched_on)},
          {"rank", opt(a.rank)},
          {"distance_m", opt(a.distance_m)}};
}

routing::Assignment assignment_from_json(const json& j) {
  routing::Assignment a;
  a.assignment_id = get_string(j, "assignment_id", "");
  a.detection_id = get_string(j, "detection_id", "");
  a.run_id = get_string(j, "run_id", "");
  a.org = get_enum<Org>(j, "org", "");
  a.verifier_id = opt_string(j, "verifier_id", "");
  a.region_tag = opt_string(j, "region_tag", "");
  a.dispatched_on = get_date(j, "dispatched_on", "");
  if (auto r = opt_number(j, "rank", "")) a.rank = static_cast<int>(*r);
  a.distance_m = opt_number(j, "distance_m", "");
  return a;
}

json to_json(const fieldops::FieldResponse& r) {
  return {{"response_id", r.response_id},
          {"assignment_id", r.assignment_id},
          {"visited_on", format_date(r.visited_on)},
          {"location_visible", r.location_visible},
          {"manure_present", opt(r.manure_present)},
          {"reporter_confidence", enum_or_null(r.reporter_confidence)},
          {"notes", r.notes},
          {"photo_uris", r.photo_uris}};
}

fieldops::FieldResponse response_from_json(const json& j) {
  fieldops::FieldResponse r;
  r.assignment_id = get_string(j, "assignment_id", "");
  r.response_id = opt_string(j, "response_id", "").value_or("resp-" + r.assignment_id);
  r.visited_on = get_date(j, "visited_on", "");
  r.location_visible = get_bool(j, "location_visible", "");
  r.manure_present = opt_bool(j, "manure_present", "");
  r.reporter_confidence = opt_enum<fieldops::ReporterConfidence>(j, "reporter_confidence", "");
  r.notes = opt_string(j, "notes", "").value_or("");
  r.photo_uris = string_list(j, "photo_uris", "");
  return r;
}

json to_json(const compliance::SpreadEvent& e) {
  return {{"event_date", format_date(e.event_date)},
          {"entity_class", to_string(e.entity_class)},
          {"animal_units", opt(e.animal_units)},
          {"waste_phase", to_string(e.waste_phase)},
          {"surface", to_string(e.surface)},
          {"emergency_approved", e.emergency_approved},
          {"claimed_pre_window", e.claimed_pre_window}};
}

compliance::SpreadEvent spread_event_from_json(const json& j, std::string_view ctx) {
  compliance::SpreadEvent e;
  e.event_date = get_date(j, "event_date", ctx);
  e.entity_class = opt_enum<compliance::EntityClass>(j, "entity_class", ctx).value_or(compliance::EntityClass::unknown);
  e.animal_units = opt_number(j, "animal_units", ctx);
  e.waste_phase = opt_enum<compliance::Phase>(j, "waste_phase", ctx).value_or(compliance::Phase::unknown);
  e.surface = opt_enum<compliance::Surface>(j, "surface", ctx).value_or(compliance::Surface::unknown);
  e.emergency_approved = opt_bool(j, "emergency_approved", ctx).value_or(false);
  e.claimed_pre_window = opt_bool(j, "claimed_pre_window", ctx).value_or(false);
  return e;
}

json to_json(const fieldops::Determination& d) {
  return {{"determination_id", d.determination_id},
          {"assignment_id", d.assignment_id},
          {"decided_on", format_date(d.decided_on)},
          {"manure_present", d.manure_present},
          {"compliance", enum_or_null(d.compliance)},
          {"method_notes", d.method_notes},
          {"event", d.event ? to_json(*d.event) : json(nullptr)}};
}

fieldops::Determination determination_from_json(const json& j, Date fallback_date) {
  fieldops::Determination d;
  d.assignment_id = get_string(j, "assignment_id", "");
  d.determination_id = opt_string(j, "determination_id", "").value_or("det-" + d.assignment_id);
  d.decided_on = opt_date(j, "decided_on", "").value_or(fallback_date);
  d.manure_present = get_bool(j, "manure_present", "");
  d.compliance = opt_enum<compliance::Compliance>(j, "compliance", "");
  d.method_notes = opt_string(j, "method_notes", "").value_or("");
  if (const json* e = find(j, "event")) d.event = spread_event_from_json(*e, "event");
  return d;
}

json to_json(const compliance::Observation& o) {
  return {{"observed_on", format_date(o.observed_on)}, {"manure_visible", o.manure_visible}, {"usable", o.usable}};
}

compliance::Observation observation_from_json(const json& j, std::string_view ctx) {
  compliance::Observation o;
  o.observed_on = get_date(j, "observed_on", ctx);
  o.manure_visible = get_bool(j, "manure_visible", ctx);
  o.usable = opt_bool(j, "usable", ctx).value_or(true);
  return o;
}

json to_json(const detections::IncidentalReport& r) {
  return {{"report_id", r.report_id},
          {"reporter_verifier_id", r.reporter_verifier_id},
          {"observed_on", format_date(r.observed_on)},
          {"lat", r.location ? json(r.location->lat) : json(nullptr)},
          {"lon", r.location ? json(r.location->lon) : json(nullptr)},
          {"notes", r.notes}};
}

detections::IncidentalReport incidental_from_json(const json& j) {
  detections::IncidentalReport r;
  r.report_id = get_string(j, "report_id", "");
  if (r.report_id.empty()) throw_validation("missing_field", "report_id", "report_id must be non-empty");
  r.reporter_verifier_id = opt_string(j, "reporter_verifier_id", "").value_or("");
  r.observed_on = get_date(j, "observed_on", "");
  auto lat = opt_number(j, "lat", "");
  auto lon = opt_number(j, "lon", "");
  if (lat.has_value() != lon.has_value()) {
    throw_validation("missing_field", lat ? "lon" : "lat", "lat and lon must be given together");
  }
  if (lat) r.location = geo::make_point(*lat, *lon);
  r.notes = opt_string(j, "notes", "").value_or("");
  return r;
}

json to_json(const fieldops::PacketManifest& m) {
  return {{"assignment_id", m.assignment_id},
          {"title", m.title},
          {"detection_image_uri", m.detection_image_uri},
          {"summer_image_uri", opt(m.summer_image_uri)},
          {"static_map_uri", m.static_map_uri},
          {"north_arrow", m.north_arrow},
          {"capture_date", format_date(m.capture_date)},
          {"centroid", {{"lat", m.centroid_lat}, {"lon", m.centroid_lon}}},
          {"bbox", to_json(m.bbox)},
          {"notes", m.notes}};
}

json to_json(const detections::RecordError& e) {
  json j{{"line", e.line}, {"reason", e.reason}};
  if (!e.detection_id.empty()) j["detection_id"] = e.detection_id;
  return j;
}

json state_to_json(const TrialState& s) {
  json j;
  j["registry"] = s.registry->source();
  json runs = json::array();
  for (const auto& [id, r] : s.runs) runs.push_back(to_json(r));
  j["runs"] = runs;
  json dets = json::object();
  for (const auto& [run, ids] : s.run_detections) {
    json arr = json::array();
    for (const auto& id : ids) arr.push_back(detections::to_record(s.detections.at(id)));
    dets[run] = arr;
  }
  j["detections"] = dets;
  json screening = json::array();
  for (const auto& [id, item] : s.screening) screening.push_back(to_json(item));
  j["screening"] = screening;
  json routed = json::array();
  for (const auto& [run, org] : s.routed) routed.push_back({run, to_string(org)});
  j["routed"] = routed;
  json assignments = json::array();
  for (const auto& [id, a] : s.assignments) assignments.push_back(to_json(a));
  j["assignments"] = assignments;
  json responses = json::array();
  for (const auto& [id, r] : s.responses) responses.push_back(to_json(r));
  j["responses"] = responses;
  json history = json::object();
  for (const auto& [id, versions] : s.response_history) {
    json arr = json::array();
    for (const auto& r : versions) arr.push_back(to_json(r));
    history[id] = arr;
  }
  j["response_history"] = history;
  json determinations = json::array();
  for (const auto& [id, d] : s.determinations) determinations.push_back(to_json(d));
  j["determinations"] = determinations;
  json observations = json::object();
  for (const auto& [id, series] : s.observations) {
    json arr = json::array();
    for (const auto& o : series) arr.push_back(to_json(o));
    observations[id] = arr;
  }
  j["observations"] = observations;
  json incidentals = json::array();
  for (const auto& [id, r] : s.incidentals) incidentals.push_back(to_json(r));
  j["incidentals"] = incidentals;
  return j;
}

TrialState state_from_json(const json& j) {
  TrialState s;
  const json& reg = require(j, "registry", "");
  if (reg.is_object() && !reg.empty()) {
    s.registry = std::make_shared<registry::Registry>(
        registry::Registry::load(reg.value("facilities", json::array()), reg.value("fields", json::object()),
                                 reg.value("verifiers", json::array())));
  }
  for (const auto& r : require(j, "runs", "")) {
    auto run = run_from_json(r);
    s.runs[run.run_id] = run;
  }
  for (const auto& [run, arr] : require(j, "detections", "").items()) {
    auto& ids = s.run_detections[run];
    for (const auto& rec : arr) {
      auto d = detections::from_record(rec, run);
      ids.push_back(d.detection_id);
      s.detections[d.detection_id] = std::move(d);
    }
  }
  for (const auto& item : require(j, "screening", "")) {
    auto it = screening_from_json(item);
    s.screening[it.detection_id] = std::move(it);
  }
  for (const auto& pair : require(j, "routed", "")) {
    s.routed.emplace(pair.at(0).get<std::string>(), parse_enum<Org>(pair.at(1).get<std::string>(), "routed"));
  }
  for (const auto& a : require(j, "assignments", "")) {
    auto as = assignment_from_json(a);
    s.assignments[as.assignment_id] = std::move(as);
  }
  for (const auto& r : require(j, "responses", "")) {
    auto resp = response_from_json(r);
    s.response_by_assignment[resp.assignment_id] = resp.response_id;
    s.responses[resp.response_id] = std::move(resp);
  }
  for (const auto& [id, arr] : require(j, "response_history", "").items()) {
    auto& versions = s.response_history[id];
    for (const auto& r : arr) versions.push_back(response_from_json(r));
  }
  for (const auto& d : require(j, "determinations", "")) {
    auto det = determination_from_json(d, Date{});
    s.determination_by_assignment[det.assignment_id] = det.determination_id;
    s.determinations[det.determination_id] = std::move(det);
  }
  for (const auto& [id, arr] : require(j, "observations", "").items()) {
    auto& series = s.observations[id];
    for (const auto& o : arr) series.push_back(observation_from_json(o, "observations"));
  }
  for (const auto& r : require(j, "incidentals", "")) {
    auto rep = incidental_from_json(r);
    s.incidentals[rep.report_id] = std::move(rep);
  }
  return s;
}

}  // namespace landtriage::codec
