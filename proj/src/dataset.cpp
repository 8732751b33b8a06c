#include "landtriage/dataset.hpp"

#include <fstream>
#include <sstream>

#include "landtriage/error.hpp"
#include "landtriage/event_log.hpp"
#include "landtriage/json_codec.hpp"

namespace landtriage {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw_not_found("file_not_found", p.string(), "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(ErrorKind::internal, "io_error", p.string(), "cannot write " + p.string());
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json screening_record_json(const ScreeningRecord& r) {
  json j{{"detection_id", r.detection_id}, {"decision", to_string(r.decision)}};
  if (r.reason) j["reason"] = to_string(*r.reason);
  if (!r.note.empty()) j["note"] = r.note;
  j["decided_on"] = format_date(r.decided_on);
  return j;
}

json read_json(const fs::path& p) {
  json j = json::parse(read_file(p), nullptr, false);
  if (j.is_discarded()) throw_validation("malformed_json", p.filename().string(), p.string() + " is not valid JSON");
  return j;
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  if (!fs::exists(p)) return out;
  std::istringstream in(read_file(p));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw_validation("malformed_json", p.filename().string(), p.string() + ":" + std::to_string(n) + " is not valid JSON");
    }
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

void write_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir / "detections");
  write_file(dir / "manifest.json", d.manifest.dump(2) + "\n");
  write_file(dir / "facilities.json", d.facilities.dump(1) + "\n");
  write_file(dir / "fields.geojson", d.fields.dump() + "\n");
  write_file(dir / "verifiers.json", d.verifiers.dump(1) + "\n");

  json runs = json::array();
  for (const auto& r : d.runs) runs.push_back(codec::to_json(r));
  write_file(dir / "runs.json", runs.dump(1) + "\n");

  std::map<std::string, std::string> per_run;
  for (const auto& r : d.runs) per_run[r.run_id];
  for (const auto& det : d.detections) per_run[det.run_id] += detections::to_record(det).dump() + "\n";
  for (const auto& [run, text] : per_run) write_file(dir / "detections" / (run + ".jsonl"), text);

  std::string screening;
  for (const auto& s : d.screening) screening += screening_record_json(s).dump() + "\n";
  write_file(dir / "screening.jsonl", screening);

  std::string csv = "assignment_id,visited_on,location_visible,manure_present,reporter_confidence,notes\n";
  for (const auto& r : d.responses) {
    csv += csv_cell(r.assignment_id) + "," + format_date(r.visited_on) + "," + (r.location_visible ? "true" : "false") +
           "," + (r.manure_present ? (*r.manure_present ? "true" : "false") : "") + "," +
           (r.reporter_confidence ? std::string(to_string(*r.reporter_confidence)) : "") + "," + csv_cell(r.notes) + "\n";
  }
  write_file(dir / "responses.csv", csv);

  std::string dets;
  for (const auto& x : d.determinations) {
    json j = codec::to_json(x);
    if (j["event"].is_null()) j.erase("event");
    if (j["compliance"].is_null()) j.erase("compliance");
    dets += j.dump() + "\n";
  }
  write_file(dir / "determinations.jsonl", dets);

  std::string obs;
  for (const auto& s : d.observations) {
    json arr = json::array();
    for (const auto& o : s.observations) arr.push_back(codec::to_json(o));
    obs += json{{"detection_id", s.detection_id}, {"observations", arr}}.dump() + "\n";
  }
  write_file(dir / "observations.jsonl", obs);

  std::string inc;
  for (const auto& r : d.incidentals) {
    json j = codec::to_json(r);
    if (j["lat"].is_null()) {
      j.erase("lat");
      j.erase("lon");
    }
    inc += j.dump() + "\n";
  }
  write_file(dir / "incidentals.jsonl", inc);

  if (!d.truth.empty()) {
    std::string truth;
    for (const auto& [id, t] : d.truth) truth += json{{"detection_id", id}, {"true_positive", t}}.dump() + "\n";
    write_file(dir / "truth.jsonl", truth);
  }
}

json import_dataset(const fs::path& dir, const Transport& send) {
  if (!fs::is_directory(dir)) throw_not_found("dataset_not_found", "dir", "no dataset directory " + dir.string());
  const json manifest = fs::exists(dir / "manifest.json") ? read_json(dir / "manifest.json") : json::object();
  const std::string prefix = "import:" + hex64(fnv1a64(manifest.dump())) + ":";
  json summary{{"requests", 0}};

  auto call = [&](const std::string& method, const std::string& path, std::map<std::string, std::string> query,
                  std::string body, const std::string& step) {
    ApiRequest req;
    req.method = method;
    req.path = path;
    req.query = std::move(query);
    req.body = std::move(body);
    req.headers["idempotency-key"] = prefix + step;
    ApiResponse res = send(req);
    summary["requests"] = summary["requests"].get<int>() + 1;
    if (res.status >= 300) {
      json err = json::parse(res.body, nullptr, false);
      const std::string code = err.is_object() ? err.value("code", "import_failed") : "import_failed";
      const std::string msg = err.is_object() ? err.value("message", res.body) : res.body;
      const ErrorKind kind = res.status == 404 ? ErrorKind::not_found
                             : res.status == 409 ? ErrorKind::conflict
                             : res.status >= 500 ? ErrorKind::internal
                                                 : ErrorKind::validation;
      throw Error(kind, code, step, "import step " + step + " failed: " + msg);
    }
    json j = json::parse(res.body);
    if (j.is_object() && j.contains("rejected") && !j["rejected"].empty()) {
      throw_validation("import_rejected", step, "import step " + step + " rejected records: " + j["rejected"].dump());
    }
    return j;
  };

  const json reg{{"facilities", read_json(dir / "facilities.json")},
                 {"fields", read_json(dir / "fields.geojson")},
                 {"verifiers", read_json(dir / "verifiers.json")}};
  summary["registry"] = call("POST", "/v1/registry", {}, reg.dump(), "registry");

  const json runs = read_json(dir / "runs.json");
  std::size_t detections = 0;
  for (const auto& r : runs) {
    const std::string id = r.at("run_id");
    call("POST", "/v1/runs", {}, r.dump(), "run:" + id);
  }
  for (const auto& r : runs) {
    const std::string id = r.at("run_id");
    const fs::path file = dir / "detections" / (id + ".jsonl");
    if (!fs::exists(file)) continue;
    detections += call("POST", "/v1/runs/" + id + "/detections", {}, read_file(file), "detections:" + id)["accepted"].get<std::size_t>();
  }
  summary["detections"] = detections;
  std::size_t queued = 0, assigned = 0;
  for (const auto& r : runs) {
    const std::string id = r.at("run_id");
    queued += call("POST", "/v1/route/" + id, {{"org", "wdnr"}}, "", "route:wdnr:" + id)["queued"].get<std::size_t>();
    assigned += call("POST", "/v1/route/" + id, {{"org", "elpc"}}, "", "route:elpc:" + id)["assigned"].get<std::size_t>();
  }
  summary["queued"] = queued;
  summary["assigned"] = assigned;

  std::size_t screened = 0;
  for (const auto& s : read_jsonl(dir / "screening.jsonl")) {
    const std::string det = s.at("detection_id");
    json body = s;
    body.erase("detection_id");
    call("POST", "/v1/screening/" + det, {}, body.dump(), "screen:" + det);
    ++screened;
  }
  summary["screened"] = screened;

  if (fs::exists(dir / "responses.csv")) {
    summary["responses"] =
        call("POST", "/v1/responses/import", {}, read_file(dir / "responses.csv"), "responses")["accepted"];
  }
  if (fs::exists(dir / "determinations.jsonl")) {
    summary["determinations"] =
        call("POST", "/v1/determinations/import", {}, read_file(dir / "determinations.jsonl"), "determinations")["accepted"];
  }
  std::size_t series = 0;
  for (const auto& o : read_jsonl(dir / "observations.jsonl")) {
    call("POST", "/v1/observations", {}, o.dump(), "observations:" + o.at("detection_id").get<std::string>());
    ++series;
  }
  summary["observation_series"] = series;
  std::size_t incidentals = 0;
  for (const auto& r : read_jsonl(dir / "incidentals.jsonl")) {
    call("POST", "/v1/incidentals", {}, r.dump(), "incidental:" + r.at("report_id").get<std::string>());
    ++incidentals;
  }
  summary["incidentals"] = incidentals;
  return summary;
}

json import_dataset(const fs::path& dir, Engine& engine) {
  Api api(engine);
  return import_dataset(dir, [&api](const ApiRequest& r) { return api.handle(r); });
}

}  // namespace landtriage
