#include "landtriage/engine.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "landtriage/error.hpp"
#include "landtriage/json_codec.hpp"
#include "landtriage/json_util.hpp"

namespace landtriage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json record_error(std::size_t line, const std::string& reason, const std::string& field) {
  json j{{"line", line}, {"reason", reason}};
  if (!field.empty()) j["field"] = field;
  return j;
}

const routing::Assignment& require_assignment(const TrialState& s, const std::string& id) {
  auto it = s.assignments.find(id);
  if (it == s.assignments.end()) throw_not_found("unknown_assignment", "assignment_id", "unknown assignment " + id);
  return it->second;
}

const detections::ModelRun& require_run(const TrialState& s, const std::string& id) {
  auto it = s.runs.find(id);
  if (it == s.runs.end()) throw_not_found("unknown_run", "run_id", "unknown run " + id);
  return it->second;
}

// Fills compliance from the recorded facts, or checks a stated ruling against them.
void resolve_compliance(fieldops::Determination& d, const compliance::SeasonalWindow& window) {
  if (!d.event) return;
  const auto w = window.for_date(d.event->event_date);
  compliance::validate(*d.event, w);
  if (!d.manure_present) return;
  const auto ruled = compliance::classify(*d.event, w);
  if (!d.compliance) {
    d.compliance = ruled;
  } else if (*d.compliance != ruled) {
    throw_validation("compliance_mismatch", "compliance",
                     "stated compliance '" + std::string(to_string(*d.compliance)) + "' disagrees with the rule result '" +
                         std::string(to_string(ruled)) + "' for the recorded facts");
  }
}

void check_new_response(const TrialState& s, const fieldops::FieldResponse& r, const std::set<std::string>& batch) {
  const auto& a = require_assignment(s, r.assignment_id);
  fieldops::validate_response(r, a);
  if (s.response_by_assignment.count(r.assignment_id) || batch.count(r.assignment_id)) {
    throw_conflict("duplicate_response", "assignment_id", "assignment " + r.assignment_id + " already has a response");
  }
  if (s.responses.count(r.response_id) || batch.count("#" + r.response_id)) {
    throw_conflict("duplicate_response_id", "response_id", "response " + r.response_id + " already exists");
  }
}

void check_new_determination(const TrialState& s, fieldops::Determination& d, const compliance::SeasonalWindow& w,
                             const std::set<std::string>& batch) {
  const auto& a = require_assignment(s, d.assignment_id);
  resolve_compliance(d, w);
  fieldops::validate_determination(d, a);
  if (s.determination_by_assignment.count(d.assignment_id) || batch.count(d.assignment_id)) {
    throw_conflict("duplicate_determination", "assignment_id",
                   "assignment " + d.assignment_id + " already has a determination");
  }
  if (s.determinations.count(d.determination_id) || batch.count("#" + d.determination_id)) {
    throw_conflict("duplicate_determination_id", "determination_id",
                   "determination " + d.determination_id + " already exists");
  }
}

}  // namespace

void apply_event(TrialState& s, const std::string& kind, const json& p) {
  if (kind == "registry_loaded") {
    s.registry = std::make_shared<registry::Registry>(
        registry::Registry::load(p.at("facilities"), p.at("fields"), p.at("verifiers")));
  } else if (kind == "run_registered") {
    auto run = codec::run_from_json(p.at("run"));
    s.runs[run.run_id] = run;
  } else if (kind == "detections_ingested") {
    const std::string run = p.at("run_id");
    auto& ids = s.run_detections[run];
    for (const auto& rec : p.at("records")) {
      auto d = detections::from_record(rec, run);
      ids.push_back(d.detection_id);
      s.detections[d.detection_id] = std::move(d);
    }
  } else if (kind == "screening_queued") {
    s.routed.emplace(p.at("run_id").get<std::string>(), Org::wdnr);
    for (const auto& item : p.at("items")) {
      auto it = codec::screening_from_json(item);
      s.screening[it.detection_id] = std::move(it);
    }
  } else if (kind == "assignment_created") {
    s.routed.emplace(p.at("run_id").get<std::string>(), parse_enum<Org>(p.at("org").get<std::string>(), "org"));
    for (const auto& a : p.at("assignments")) {
      auto as = codec::assignment_from_json(a);
      s.assignments[as.assignment_id] = std::move(as);
    }
  } else if (kind == "screening_decided") {
    auto item = codec::screening_from_json(p.at("item"));
    s.screening[item.detection_id] = std::move(item);
    if (p.contains("assignment") && !p["assignment"].is_null()) {
      auto a = codec::assignment_from_json(p["assignment"]);
      s.assignments[a.assignment_id] = std::move(a);
    }
  } else if (kind == "response_submitted") {
    for (const auto& r : p.at("responses")) {
      auto resp = codec::response_from_json(r);
      s.response_by_assignment[resp.assignment_id] = resp.response_id;
      s.responses[resp.response_id] = std::move(resp);
    }
  } else if (kind == "response_amended") {
    auto resp = codec::response_from_json(p.at("response"));
    auto& slot = s.responses.at(resp.response_id);
    s.response_history[resp.response_id].push_back(slot);
    slot = std::move(resp);
  } else if (kind == "determination_submitted") {
    for (const auto& d : p.at("determinations")) {
      auto det = codec::determination_from_json(d, Date{});
      s.determination_by_assignment[det.assignment_id] = det.determination_id;
      s.determinations[det.determination_id] = std::move(det);
    }
  } else if (kind == "observations_recorded") {
    std::vector<compliance::Observation> series;
    for (const auto& o : p.at("observations")) series.push_back(codec::observation_from_json(o, "observations"));
    s.observations[p.at("detection_id").get<std::string>()] = std::move(series);
  } else if (kind == "incidental_reported") {
    auto r = codec::incidental_from_json(p.at("report"));
    s.incidentals[r.report_id] = std::move(r);
  } else {
    throw Error(ErrorKind::internal, "unknown_event_kind", "kind", "unknown event kind '" + kind + "'");
  }
}

std::string state_digest(const TrialState& s) { return hex64(fnv1a64(codec::state_to_json(s).dump())); }

Engine::Engine(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (!cfg_.data_dir.empty()) replay_from_disk();
}

Engine::~Engine() = default;

void Engine::replay_from_disk() {
  const fs::path dir(cfg_.data_dir);
  fs::create_directories(dir / "snapshots");
  LogLoad load;
  log_ = std::make_unique<EventLog>(EventLog::open(dir / "events.jsonl", load, cfg_.fsync));
  warnings_ = load.warnings;
  const std::uint64_t last = load.records.empty() ? 0 : load.records.back().seq;

  std::vector<fs::path> snaps;
  for (const auto& e : fs::directory_iterator(dir / "snapshots")) {
    if (e.path().extension() == ".json" && e.path().filename().string().rfind("snapshot-", 0) == 0) {
      snaps.push_back(e.path());
    }
  }
  std::sort(snaps.rbegin(), snaps.rend());
  std::uint64_t start = 0;
  for (const auto& p : snaps) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded() || !j.contains("seq") || !j.contains("state") || !j.contains("digest")) {
      warnings_.push_back("ignoring unreadable snapshot " + p.filename().string());
      continue;
    }
    const auto seq = j["seq"].get<std::uint64_t>();
    if (seq > last) {
      warnings_.push_back("ignoring snapshot " + p.filename().string() + " beyond the end of the log");
      continue;
    }
    if (hex64(fnv1a64(j["state"].dump())) != j["digest"].get<std::string>()) {
      warnings_.push_back("ignoring snapshot " + p.filename().string() + " with a bad digest");
      continue;
    }
    state_ = codec::state_from_json(j["state"]);
    start = seq;
    break;
  }
  for (const auto& r : load.records) {
    if (r.seq > start) apply_event(state_, r.kind, r.payload);
    if (r.idempotency_key && r.response) {
      idempotent_[*r.idempotency_key] = Reply{r.response->at("status").get<int>(), r.response->at("body")};
    }
  }
  seq_ = last;
}

std::optional<Reply> Engine::replay_reply(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = idempotent_.find(key);
  if (it == idempotent_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Engine::last_seq() const {
  std::shared_lock lock(mu_);
  return seq_;
}

std::string Engine::digest() const {
  std::shared_lock lock(mu_);
  return state_digest(state_);
}

void Engine::snapshot() {
  std::unique_lock lock(mu_);
  write_snapshot_locked();
}

void Engine::write_snapshot_locked() {
  if (!log_) return;
  const fs::path dir = fs::path(cfg_.data_dir) / "snapshots";
  json state = codec::state_to_json(state_);
  json j{{"seq", seq_}, {"digest", hex64(fnv1a64(state.dump()))}, {"state", std::move(state)}};
  char name[40];
  std::snprintf(name, sizeof name, "snapshot-%012llu.json", static_cast<unsigned long long>(seq_));
  const fs::path tmp = dir / (std::string(name) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << j.dump();
    if (!out) throw Error(ErrorKind::internal, "io_error", tmp.string(), "snapshot write failed");
  }
  fs::rename(tmp, dir / name);
  // Keep the two most recent.
  std::vector<fs::path> snaps;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") snaps.push_back(e.path());
  }
  std::sort(snaps.begin(), snaps.end());
  for (std::size_t i = 0; i + 2 < snaps.size(); ++i) fs::remove(snaps[i]);
}

Reply Engine::commit(const std::string& kind, json payload, Reply reply, const Key& key) {
  EventRecord r;
  r.seq = seq_ + 1;
  r.recorded_at = now_timestamp_utc();
  r.kind = kind;
  r.payload = std::move(payload);
  r.idempotency_key = key;
  if (key) r.response = json{{"status", reply.status}, {"body", reply.body}};
  if (log_) log_->append(r);
  apply_event(state_, r.kind, r.payload);
  seq_ = r.seq;
  if (key) idempotent_[*key] = reply;
  if (cfg_.snapshot_every && seq_ % cfg_.snapshot_every == 0) write_snapshot_locked();
  return reply;
}

std::optional<Reply> Engine::cached(const Key& key) const {
  if (!key) return std::nullopt;
  auto it = idempotent_.find(*key);
  if (it == idempotent_.end()) return std::nullopt;
  return it->second;
}

Reply Engine::load_registry(const json& facilities, const json& fields, const json& verifiers, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  if (!state_.runs.empty()) {
    throw_conflict("registry_locked", "registry", "the registry cannot be replaced once runs are registered");
  }
  const auto reg = registry::Registry::load(facilities, fields, verifiers);
  std::size_t cafo = 0;
  for (const auto& f : reg.facilities()) cafo += f.kind == registry::FacilityKind::cafo;
  Reply reply{200,
              {{"facilities", reg.facilities().size()},
               {"cafo_facilities", cafo},
               {"fields", reg.fields().size()},
               {"verifiers", reg.verifiers().size()}}};
  return commit("registry_loaded", reg.source(), std::move(reply), key);
}

Reply Engine::register_run(const json& body, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  auto run = codec::run_from_json(body);
  auto warnings = detections::validate_run(run);
  if (state_.runs.count(run.run_id)) throw_conflict("duplicate_run", "run_id", "run " + run.run_id + " already exists");
  Reply reply{201, {{"run", codec::to_json(run)}, {"warnings", warnings}}};
  return commit("run_registered", {{"run", codec::to_json(run)}}, std::move(reply), key);
}

Reply Engine::ingest_detections(const std::string& run_id, std::string_view jsonl, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  require_run(state_, run_id);
  auto batch = detections::parse_detection_lines(jsonl, run_id,
                                                 [this](const std::string& id) { return state_.detections.count(id) > 0; });
  json rejected = json::array();
  for (const auto& e : batch.rejected) rejected.push_back(codec::to_json(e));
  json records = json::array();
  for (const auto& d : batch.accepted) records.push_back(detections::to_record(d));
  Reply reply{200, {{"run_id", run_id}, {"accepted", batch.accepted.size()}, {"rejected", rejected}}};
  if (batch.accepted.empty() && !key) return reply;
  return commit("detections_ingested", {{"run_id", run_id}, {"records", std::move(records)}}, std::move(reply), key);
}

Reply Engine::route(const std::string& run_id, Org org, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  const auto& run = require_run(state_, run_id);
  if (state_.routed.count({run_id, org})) {
    throw_conflict("already_routed", "run_id", "run " + run_id + " was already routed to " + std::string(to_string(org)));
  }
  const auto dets = state_.run_detection_list(run_id);
  if (org == Org::wdnr) {
    auto items = routing::route_wdnr(run, dets, *state_.registry, cfg_.score_threshold);
    json arr = json::array();
    for (const auto& it : items) arr.push_back(codec::to_json(it));
    Reply reply{200, {{"run_id", run_id}, {"org", "wdnr"}, {"queued", items.size()}, {"items", arr}}};
    return commit("screening_queued", {{"run_id", run_id}, {"items", arr}}, std::move(reply), key);
  }
  auto assignments = routing::route_elpc(run, dets, *state_.registry, cfg_.elpc_params());
  json arr = json::array();
  for (const auto& a : assignments) arr.push_back(codec::to_json(a));
  Reply reply{200, {{"run_id", run_id}, {"org", "elpc"}, {"assigned", assignments.size()}, {"assignments", arr}}};
  return commit("assignment_created", {{"run_id", run_id}, {"org", "elpc"}, {"assignments", arr}}, std::move(reply), key);
}

Reply Engine::decide_screening(const std::string& detection_id, const json& body, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  using namespace json_util;
  auto it = state_.screening.find(detection_id);
  if (it == state_.screening.end()) {
    throw_not_found("unknown_detection", "detection_id", "detection " + detection_id + " is not in the screening queue");
  }
  const auto decision = get_enum<routing::Decision>(body, "decision", "");
  const auto reason = opt_enum<routing::RejectReason>(body, "reason", "");
  const auto note = opt_string(body, "note", "").value_or("");
  const auto decided_on = opt_date(body, "decided_on", "").value_or(today_utc());
  auto item = routing::decide(it->second, decision, reason, note, decided_on);
  json payload{{"item", codec::to_json(item)}, {"assignment", nullptr}};
  if (item.status == routing::ScreeningStatus::accepted) {
    auto a = routing::wdnr_assignment(item, *state_.registry);
    if (state_.assignments.count(a.assignment_id)) {
      throw_conflict("duplicate_assignment", "assignment_id", "assignment " + a.assignment_id + " already exists");
    }
    payload["assignment"] = codec::to_json(a);
  }
  Reply reply{200, payload};
  return commit("screening_decided", std::move(payload), std::move(reply), key);
}

Reply Engine::submit_response(const json& body, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  auto r = codec::response_from_json(body);
  check_new_response(state_, r, {});
  json rj = codec::to_json(r);
  Reply reply{201, rj};
  return commit("response_submitted", {{"responses", json::array({rj})}}, std::move(reply), key);
}

Reply Engine::import_responses(std::string_view csv, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  auto parsed = fieldops::parse_response_csv(csv);
  std::vector<std::pair<std::size_t, json>> errors;
  for (const auto& e : parsed.errors) errors.emplace_back(e.line, record_error(e.line, e.reason, e.field));
  std::set<std::string> batch;
  json accepted = json::array();
  for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
    const auto& r = parsed.rows[i];
    try {
      check_new_response(state_, r, batch);
      batch.insert(r.assignment_id);
      batch.insert("#" + r.response_id);
      accepted.push_back(codec::to_json(r));
    } catch (const Error& e) {
      errors.emplace_back(parsed.lines[i], record_error(parsed.lines[i], e.code(), e.field()));
    }
  }
  std::sort(errors.begin(), errors.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  json rejected = json::array();
  for (auto& [line, e] : errors) rejected.push_back(std::move(e));
  Reply reply{200, {{"accepted", accepted.size()}, {"rejected", rejected}}};
  if (accepted.empty() && !key) return reply;
  return commit("response_submitted", {{"responses", std::move(accepted)}}, std::move(reply), key);
}

Reply Engine::amend_response(const std::string& response_id, const json& body, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  auto it = state_.responses.find(response_id);
  if (it == state_.responses.end()) throw_not_found("unknown_response", "response_id", "unknown response " + response_id);
  json merged = body.is_object() ? body : json::object();
  if (merged.contains("assignment_id") && merged["assignment_id"] != it->second.assignment_id) {
    throw_validation("assignment_mismatch", "assignment_id", "an amendment cannot move a response to another assignment");
  }
  merged["assignment_id"] = it->second.assignment_id;
  merged["response_id"] = response_id;
  auto r = codec::response_from_json(merged);
  fieldops::validate_response(r, require_assignment(state_, r.assignment_id));
  json rj = codec::to_json(r);
  const std::size_t version = state_.response_history.count(response_id)
                                  ? state_.response_history.at(response_id).size() + 2
                                  : 2;
  Reply reply{200, {{"response", rj}, {"version", version}}};
  return commit("response_amended", {{"response", rj}}, std::move(reply), key);
}

Reply Engine::submit_determination(const json& body, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  auto d = codec::determination_from_json(body, today_utc());
  check_new_determination(state_, d, cfg_.rule_window, {});
  json dj = codec::to_json(d);
  Reply reply{201, dj};
  return commit("determination_submitted", {{"determinations", json::array({dj})}}, std::move(reply), key);
}

Reply Engine::import_determinations(std::string_view jsonl, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  json accepted = json::array();
  json rejected = json::array();
  std::set<std::string> batch;
  const Date today = today_utc();
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    const auto nl = jsonl.find('\n');
    std::string_view line = jsonl.substr(0, nl);
    jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      rejected.push_back(record_error(line_no, "malformed_json", ""));
      continue;
    }
    try {
      auto d = codec::determination_from_json(j, today);
      check_new_determination(state_, d, cfg_.rule_window, batch);
      batch.insert(d.assignment_id);
      batch.insert("#" + d.determination_id);
      accepted.push_back(codec::to_json(d));
    } catch (const Error& e) {
      rejected.push_back(record_error(line_no, e.code(), e.field()));
    }
  }
  Reply reply{200, {{"accepted", accepted.size()}, {"rejected", rejected}}};
  if (accepted.empty() && !key) return reply;
  return commit("determination_submitted", {{"determinations", std::move(accepted)}}, std::move(reply), key);
}

Reply Engine::record_observations(const json& body, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  using namespace json_util;
  const auto det_id = get_string(body, "detection_id", "");
  auto det = state_.detections.find(det_id);
  if (det == state_.detections.end()) throw_not_found("unknown_detection", "detection_id", "unknown detection " + det_id);
  const json& arr = require(body, "observations", "");
  if (!arr.is_array()) throw_validation("invalid_type", "observations", "observations must be an array");
  std::vector<compliance::Observation> series;
  json out = json::array();
  for (std::size_t i = 0; i < arr.size(); ++i) {
    series.push_back(codec::observation_from_json(arr[i], "observations[" + std::to_string(i) + "]"));
    out.push_back(codec::to_json(series.back()));
  }
  const auto window = cfg_.rule_window.for_date(state_.runs.at(det->second.run_id).imagery_date);
  // Also rejects unsorted series.
  const auto verdict = compliance::corroborate_pre_window(series, window, cfg_.boundary_days);
  Reply reply{200, {{"detection_id", det_id}, {"observations", series.size()}, {"corroboration", to_string(verdict)}}};
  return commit("observations_recorded", {{"detection_id", det_id}, {"observations", std::move(out)}}, std::move(reply),
                key);
}

Reply Engine::report_incidental(const json& body, const Key& key) {
  std::unique_lock lock(mu_);
  if (auto hit = cached(key)) return *hit;
  auto r = codec::incidental_from_json(body);
  if (state_.incidentals.count(r.report_id)) {
    throw_conflict("duplicate_report", "report_id", "incidental report " + r.report_id + " already exists");
  }
  if (!r.reporter_verifier_id.empty() && !state_.registry->find_verifier(r.reporter_verifier_id)) {
    throw_not_found("unknown_verifier", "reporter_verifier_id", "unknown verifier " + r.reporter_verifier_id);
  }
  json rj = codec::to_json(r);
  Reply reply{201, rj};
  return commit("incidental_reported", {{"report", rj}}, std::move(reply), key);
}

}  // namespace landtriage
