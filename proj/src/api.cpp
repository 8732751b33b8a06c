#include "landtriage/api.hpp"

#include <algorithm>
#include <sstream>

#include "landtriage/analytics.hpp"
#include "landtriage/error.hpp"
#include "landtriage/json_codec.hpp"
#include "landtriage/report_text.hpp"

namespace landtriage {

using nlohmann::json;
using Query = std::map<std::string, std::string>;

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::internal: return 500;
  }
  return 500;
}

namespace {

ApiResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

ApiResponse error_response(int status, const std::string& code, const std::string& field, const std::string& message) {
  return json_response(status, {{"code", code}, {"field", field}, {"message", message}});
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto end = pos == std::string_view::npos ? s.size() : pos;
    if (end > start) out.emplace_back(s.substr(start, end - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::string> q_str(const Query& q, const std::string& key) {
  auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::optional<double> q_num(const Query& q, const std::string& key) {
  auto s = q_str(q, key);
  if (!s) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(*s, &used);
    if (used != s->size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw_validation("invalid_type", key, key + " must be a number");
  }
}

bool q_bool(const Query& q, const std::string& key, bool fallback) {
  auto s = q_str(q, key);
  if (!s) return fallback;
  if (*s == "true" || *s == "1") return true;
  if (*s == "false" || *s == "0") return false;
  throw_validation("invalid_type", key, key + " must be true or false");
}

template <typename E>
std::optional<E> q_enum(const Query& q, const std::string& key) {
  auto s = q_str(q, key);
  if (!s) return std::nullopt;
  return parse_enum<E>(*s, key);
}

std::vector<double> q_edges(const Query& q) {
  std::vector<double> edges;
  if (auto s = q_str(q, "edges")) {
    for (const auto& part : split(*s, ',')) {
      try {
        edges.push_back(std::stod(part));
      } catch (const std::exception&) {
        throw_validation("invalid_type", "edges", "edges must be comma-separated numbers");
      }
    }
  }
  return edges;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw_validation("malformed_json", "body", "request body is not valid JSON");
  if (!j.is_object()) throw_validation("invalid_type", "body", "request body must be a JSON object");
  return j;
}

json parse_doc(const std::string& text, const std::string& name) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw_validation("malformed_json", name, name + " is not valid JSON");
  return j;
}

json screening_view(const TrialState& s, const routing::ScreeningItem& item) {
  json j = codec::to_json(item);
  const auto& d = s.detections.at(item.detection_id);
  const auto& run = s.runs.at(item.run_id);
  const auto c = d.centroid();
  j["image_uri"] = d.image_uri;
  j["summer_image_uri"] = d.summer_image_uri ? json(*d.summer_image_uri) : json(nullptr);
  j["static_map_uri"] = "geo:" + fieldops::format_coord(c.lat) + "," + fieldops::format_coord(c.lon) + "?z=15";
  j["capture_date"] = format_date(run.imagery_date);
  j["bbox"] = codec::to_json(d.bbox);
  return j;
}

}  // namespace

const std::vector<std::string>& Api::report_names() {
  static const std::vector<std::string> names = {"confirmation_by_bucket", "lift",       "agreement",
                                                 "compliance",             "process",    "group_comparison",
                                                 "confidence_crosstab",    "incidentals", "totals"};
  return names;
}

ApiResponse Api::handle(const ApiRequest& req) const {
  try {
    return dispatch(req);
  } catch (const Error& e) {
    return error_response(http_status(e.kind()), e.code(), e.field(), e.what());
  } catch (const json::exception& e) {
    return error_response(400, "malformed_json", "", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", "", e.what());
  }
}

ApiResponse Api::dispatch(const ApiRequest& req) const {
  const auto seg = split(req.path, '/');
  const auto& q = req.query;
  const bool get = req.method == "GET";
  const bool post = req.method == "POST";
  Engine::Key key;
  if (auto it = req.headers.find("idempotency-key"); it != req.headers.end() && !it->second.empty()) key = it->second;

  auto reply = [](const Reply& r) { return json_response(r.status, r.body); };
  auto method_not_allowed = [&] {
    return error_response(405, "method_not_allowed", "method", req.method + " is not supported on " + req.path);
  };

  if (seg.size() < 2 || seg[0] != "v1") return error_response(404, "unknown_endpoint", "path", "no endpoint " + req.path);
  const std::string& top = seg[1];
  const std::size_t n = seg.size();

  if (top == "health" && n == 2) return json_response(200, {{"status", "ok"}, {"seq", engine_.last_seq()}});
  if (top == "config" && n == 2) return json_response(200, engine_.config().to_json());
  if (top == "digest" && n == 2) {
    return json_response(200, {{"seq", engine_.last_seq()}, {"digest", engine_.digest()}});
  }

  if (top == "registry" && n == 2) {
    if (get) {
      return json_response(200, engine_.read([](const TrialState& s) {
        std::size_t cafo = 0;
        for (const auto& f : s.registry->facilities()) cafo += f.kind == registry::FacilityKind::cafo;
        return json{{"facilities", s.registry->facilities().size()},
                    {"cafo_facilities", cafo},
                    {"fields", s.registry->fields().size()},
                    {"verifiers", s.registry->verifiers().size()}};
      }));
    }
    if (!post) return method_not_allowed();
    json fac, fld, ver;
    if (!req.files.empty()) {
      for (const char* part : {"facilities", "fields", "verifiers"}) {
        if (!req.files.count(part)) throw_validation("missing_field", part, std::string("multipart part '") + part + "' is required");
      }
      fac = parse_doc(req.files.at("facilities"), "facilities");
      fld = parse_doc(req.files.at("fields"), "fields");
      ver = parse_doc(req.files.at("verifiers"), "verifiers");
    } else {
      json b = parse_body(req.body);
      for (const char* part : {"facilities", "fields", "verifiers"}) {
        if (!b.contains(part)) throw_validation("missing_field", part, std::string(part) + " is required");
      }
      fac = b["facilities"];
      fld = b["fields"];
      ver = b["verifiers"];
    }
    return reply(engine_.load_registry(fac, fld, ver, key));
  }

  if (top == "runs") {
    if (n == 2 && post) return reply(engine_.register_run(parse_body(req.body), key));
    if (n == 2 && get) {
      return json_response(200, engine_.read([](const TrialState& s) {
        json arr = json::array();
        for (const auto& [id, r] : s.runs) {
          json j = codec::to_json(r);
          auto it = s.run_detections.find(id);
          j["detections"] = it == s.run_detections.end() ? 0 : it->second.size();
          j["routed_wdnr"] = s.routed.count({id, Org::wdnr}) > 0;
          j["routed_elpc"] = s.routed.count({id, Org::elpc}) > 0;
          arr.push_back(j);
        }
        return arr;
      }));
    }
    if (n == 4 && seg[3] == "detections") {
      if (post) return reply(engine_.ingest_detections(seg[2], req.body, key));
      if (get) {
        return json_response(200, engine_.read([&](const TrialState& s) {
          if (!s.runs.count(seg[2])) throw_not_found("unknown_run", "run_id", "unknown run " + seg[2]);
          json arr = json::array();
          for (const auto& d : s.run_detection_list(seg[2])) arr.push_back(detections::to_record(d));
          return arr;
        }));
      }
    }
    if (n == 3 && get) {
      return json_response(200, engine_.read([&](const TrialState& s) {
        auto it = s.runs.find(seg[2]);
        if (it == s.runs.end()) throw_not_found("unknown_run", "run_id", "unknown run " + seg[2]);
        return codec::to_json(it->second);
      }));
    }
    return method_not_allowed();
  }

  if (top == "route" && n == 3) {
    if (!post) return method_not_allowed();
    auto org = q_enum<Org>(q, "org");
    if (!org) throw_validation("missing_field", "org", "org is required (wdnr or elpc)");
    return reply(engine_.route(seg[2], *org, key));
  }

  if (top == "screening") {
    if (n == 2 && get) {
      auto status = q_enum<routing::ScreeningStatus>(q, "status");
      auto run = q_str(q, "run_id");
      return json_response(200, engine_.read([&](const TrialState& s) {
        std::vector<const routing::ScreeningItem*> items;
        for (const auto& [id, item] : s.screening) {
          if (status && item.status != *status) continue;
          if (run && item.run_id != *run) continue;
          items.push_back(&item);
        }
        std::sort(items.begin(), items.end(), [](const auto* a, const auto* b) {
          if (a->score != b->score) return a->score > b->score;
          return a->detection_id < b->detection_id;
        });
        json arr = json::array();
        for (const auto* it : items) arr.push_back(screening_view(s, *it));
        return arr;
      }));
    }
    if (n == 3 && post) return reply(engine_.decide_screening(seg[2], parse_body(req.body), key));
    return method_not_allowed();
  }

  if (top == "assignments") {
    if (n == 2 && get) {
      auto org = q_enum<Org>(q, "org");
      auto verifier = q_str(q, "verifier_id");
      auto run = q_str(q, "run_id");
      return json_response(200, engine_.read([&](const TrialState& s) {
        std::vector<const routing::Assignment*> list;
        for (const auto& [id, a] : s.assignments) {
          if (org && a.org != *org) continue;
          if (verifier && a.verifier_id != *verifier) continue;
          if (run && a.run_id != *run) continue;
          list.push_back(&a);
        }
        std::sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
          return std::tuple(a->run_id, a->verifier_id.value_or(""), a->rank.value_or(0), a->assignment_id) <
                 std::tuple(b->run_id, b->verifier_id.value_or(""), b->rank.value_or(0), b->assignment_id);
        });
        json arr = json::array();
        for (const auto* a : list) arr.push_back(codec::to_json(*a));
        return arr;
      }));
    }
    if (n == 3 && get) {
      return json_response(200, engine_.read([&](const TrialState& s) {
        auto it = s.assignments.find(seg[2]);
        if (it == s.assignments.end()) throw_not_found("unknown_assignment", "assignment_id", "unknown assignment " + seg[2]);
        return codec::to_json(it->second);
      }));
    }
    return method_not_allowed();
  }

  if (top == "packets" && n == 3) {
    if (!get) return method_not_allowed();
    return json_response(200, engine_.read([&](const TrialState& s) {
      auto it = s.assignments.find(seg[2]);
      if (it == s.assignments.end()) throw_not_found("unknown_assignment", "assignment_id", "unknown assignment " + seg[2]);
      const auto& a = it->second;
      return codec::to_json(fieldops::build_packet(a, s.detections.at(a.detection_id), s.runs.at(a.run_id)));
    }));
  }

  if (top == "responses") {
    if (n == 2 && post) return reply(engine_.submit_response(parse_body(req.body), key));
    if (n == 3 && seg[2] == "import" && post) return reply(engine_.import_responses(req.body, key));
    if (n == 4 && seg[3] == "amend" && post) return reply(engine_.amend_response(seg[2], parse_body(req.body), key));
    if (n == 2 && get) {
      auto assignment = q_str(q, "assignment_id");
      return json_response(200, engine_.read([&](const TrialState& s) {
        json arr = json::array();
        for (const auto& [id, r] : s.responses) {
          if (assignment && r.assignment_id != *assignment) continue;
          arr.push_back(codec::to_json(r));
        }
        return arr;
      }));
    }
    if (n == 3 && get) {
      return json_response(200, engine_.read([&](const TrialState& s) {
        auto it = s.responses.find(seg[2]);
        if (it == s.responses.end()) throw_not_found("unknown_response", "response_id", "unknown response " + seg[2]);
        json history = json::array();
        if (auto h = s.response_history.find(seg[2]); h != s.response_history.end()) {
          for (const auto& r : h->second) history.push_back(codec::to_json(r));
        }
        return json{{"response", codec::to_json(it->second)}, {"history", history}};
      }));
    }
    return method_not_allowed();
  }

  if (top == "determinations") {
    if (n == 2 && post) return reply(engine_.submit_determination(parse_body(req.body), key));
    if (n == 3 && seg[2] == "import" && post) return reply(engine_.import_determinations(req.body, key));
    if (n == 2 && get) {
      return json_response(200, engine_.read([](const TrialState& s) {
        json arr = json::array();
        for (const auto& [id, d] : s.determinations) arr.push_back(codec::to_json(d));
        return arr;
      }));
    }
    return method_not_allowed();
  }

  if (top == "observations" && n == 2) {
    if (post) return reply(engine_.record_observations(parse_body(req.body), key));
    if (get) {
      auto det = q_str(q, "detection_id");
      return json_response(200, engine_.read([&](const TrialState& s) {
        json out = json::object();
        for (const auto& [id, series] : s.observations) {
          if (det && id != *det) continue;
          json arr = json::array();
          for (const auto& o : series) arr.push_back(codec::to_json(o));
          out[id] = arr;
        }
        return out;
      }));
    }
    return method_not_allowed();
  }

  if (top == "incidentals" && n == 2) {
    if (post) return reply(engine_.report_incidental(parse_body(req.body), key));
    if (get) {
      return json_response(200, engine_.read([](const TrialState& s) {
        json arr = json::array();
        for (const auto& [id, r] : s.incidentals) arr.push_back(codec::to_json(r));
        return arr;
      }));
    }
    return method_not_allowed();
  }

  if (top == "dedupe" && n == 2) {
    if (!get) return method_not_allowed();
    auto a = q_str(q, "run_a");
    auto b = q_str(q, "run_b");
    if (!a || !b) throw_validation("missing_field", a ? "run_b" : "run_a", "run_a and run_b are required");
    const double iou = q_num(q, "iou").value_or(0.5);
    return json_response(200, engine_.read([&](const TrialState& s) {
      for (const auto* r : {&*a, &*b}) {
        if (!s.runs.count(*r)) throw_not_found("unknown_run", "run_id", "unknown run " + *r);
      }
      json arr = json::array();
      for (const auto& p : detections::dedupe(s.run_detection_list(*a), s.run_detection_list(*b), iou)) {
        arr.push_back({{"detection_a", p.detection_a}, {"detection_b", p.detection_b}, {"iou", analytics::round_to(p.iou, 6)}});
      }
      return arr;
    }));
  }

  if (top == "reports" && n == 3) {
    if (!get) return method_not_allowed();
    const auto& names = report_names();
    if (std::find(names.begin(), names.end(), seg[2]) == names.end()) {
      return error_response(404, "unknown_report", "name", "no report named " + seg[2]);
    }
    json body = report(seg[2], q);
    const auto format = q_str(q, "format").value_or("json");
    if (format == "text") return {200, "text/plain; charset=utf-8", render_report_text(seg[2], body)};
    if (format == "csv") return {200, "text/csv; charset=utf-8", render_report_csv(seg[2], body)};
    if (format != "json") throw_validation("invalid_enum", "format", "format must be json, text or csv");
    return json_response(200, body);
  }

  return error_response(404, "unknown_endpoint", "path", "no endpoint " + req.method + " " + req.path);
}

json Api::report(const std::string& name, const Query& q) const {
  using namespace analytics;
  const auto& cfg = engine_.config();
  const auto edges = q_edges(q);
  if (name == "confirmation_by_bucket") {
    const Org org = q_enum<Org>(q, "org").value_or(Org::elpc);
    const bool screened = q_bool(q, "screened_only", false);
    if (screened && org != Org::wdnr) {
      throw_validation("invalid_combination", "screened_only", "screened_only applies to the wdnr desk screen only");
    }
    return engine_.read([&](const TrialState& s) { return to_json(confirmation_by_bucket(s, org, screened, edges)); });
  }
  if (name == "totals") {
    return engine_.read([](const TrialState& s) {
      return json{{"elpc", to_json(trial_totals(s, Org::elpc))}, {"wdnr", to_json(trial_totals(s, Org::wdnr))}};
    });
  }
  if (name == "lift") {
    const Org org = q_enum<Org>(q, "org").value_or(Org::wdnr);
    const double cut = q_num(q, "top_cut").value_or(0.8);
    auto total = q_num(q, "total_images");
    if (!total) throw_validation("missing_field", "total_images", "total_images is required for lift");
    auto [sent, confirmed, top] = engine_.read([&](const TrialState& s) {
      const auto t = trial_totals(s, org);
      const auto rate = rate_at_or_above(confirmation_by_bucket(s, org, false, edges), cut);
      return std::tuple{double(t.sent), double(t.confirmed), rate.value_or(0.0)};
    });
    sent = q_num(q, "sent").value_or(sent);
    confirmed = q_num(q, "confirmed").value_or(confirmed);
    top = q_num(q, "top_bucket_rate").value_or(top);
    json j = to_json(lift_metrics(*total, sent, confirmed, top, q_num(q, "claimed_review_reduction")));
    j["inputs"] = {{"org", to_string(org)},
                   {"total_images", *total},
                   {"sent", sent},
                   {"confirmed", confirmed},
                   {"top_cut", cut},
                   {"top_bucket_rate", round_to(top, 3)}};
    return j;
  }
  if (name == "agreement") return engine_.read([](const TrialState& s) { return to_json(agreement_table(s)); });
  if (name == "compliance") {
    const int boundary = static_cast<int>(q_num(q, "boundary_days").value_or(cfg.boundary_days));
    if (boundary < 0) throw_validation("invalid_config", "boundary_days", "boundary_days must be non-negative");
    return engine_.read([&](const TrialState& s) {
      json j = to_json(compliance_breakdown(s));
      j["corroboration"] = to_json(corroboration_summary(s, cfg.rule_window, boundary));
      return j;
    });
  }
  if (name == "process") return engine_.read([&](const TrialState& s) { return to_json(process_metrics(s, edges)); });
  if (name == "group_comparison") {
    const auto grouping = q_enum<Grouping>(q, "grouping").value_or(Grouping::binary);
    std::vector<compliance::Compliance> excluded = {compliance::Compliance::compliant_other,
                                                    compliance::Compliance::indeterminate};
    if (auto it = q.find("exclude"); it != q.end()) {
      excluded.clear();
      for (const auto& part : split(it->second, ',')) excluded.push_back(parse_enum<compliance::Compliance>(part, "exclude"));
    }
    return engine_.read([&](const TrialState& s) {
      json j = to_json(group_comparison(s, grouping, excluded));
      json ex = json::array();
      for (auto c : excluded) ex.push_back(to_string(c));
      return json{{"grouping", to_string(grouping)}, {"excluded", ex}, {"metrics", j}};
    });
  }
  if (name == "confidence_crosstab") {
    return engine_.read([&](const TrialState& s) { return to_json(reporter_confidence_crosstab(s, edges)); });
  }
  // incidentals
  auto params = cfg.incidental_params();
  params.score_floor = q_num(q, "score_floor").value_or(params.score_floor);
  return engine_.read([&](const TrialState& s) { return to_json(incidental_breakdown(s, params)); });
}

}  // namespace landtriage
