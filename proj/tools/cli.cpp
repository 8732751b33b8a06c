#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "landtriage/api.hpp"
#include "landtriage/client.hpp"
#include "landtriage/config.hpp"
#include "landtriage/dataset.hpp"
#include "landtriage/engine.hpp"
#include "landtriage/error.hpp"
#include "landtriage/report_text.hpp"
#include "landtriage/server.hpp"
#include "landtriage/simulate.hpp"

namespace landtriage::cli {

namespace {

using nlohmann::json;

// CLI report names -> service report names.
const std::map<std::string, std::string> kReportNames = {
    {"confirmation", "confirmation_by_bucket"}, {"lift", "lift"},
    {"agreement", "agreement"},                 {"compliance", "compliance"},
    {"process", "process"},                     {"groups", "group_comparison"},
    {"crosstab", "confidence_crosstab"},        {"incidentals", "incidentals"},
    {"totals", "totals"}};

int exit_code_for_status(int status) {
  if (status < 400) return kOk;
  if (status == 400 || status == 409) return kValidation;
  if (status == 404 || status == 405) return kUsage;
  return kInternal;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::conflict:
      return kValidation;
    case ErrorKind::not_found:
      return kUsage;
    case ErrorKind::internal:
      return kInternal;
  }
  return kInternal;
}

struct Globals {
  bool json_out = false;
  std::string data_dir;
  std::string config_path;
  std::string remote;
  std::string idempotency_key;
};

// Lazily opens the local engine (or remote client) on first use so `simulate`
// never touches a data directory.
class Session {
 public:
  explicit Session(const Globals& g) : g_(g) {}

  ServiceConfig config() const {
    ServiceConfig cfg = ServiceConfig::load(g_.config_path);
    if (!g_.data_dir.empty()) cfg.data_dir = g_.data_dir;
    cfg.validate();
    return cfg;
  }

  Engine& engine() {
    if (!engine_) engine_ = std::make_unique<Engine>(config());
    return *engine_;
  }

  const Transport& transport() {
    if (!transport_) {
      if (!g_.remote.empty()) {
        transport_ = http_transport(g_.remote);
      } else {
        api_ = std::make_unique<Api>(engine());
        transport_ = local_transport(*api_);
      }
    }
    return transport_;
  }

  ApiResponse send(ApiRequest req) {
    if (!g_.idempotency_key.empty()) req.headers["idempotency-key"] = g_.idempotency_key;
    return transport()(req);
  }

 private:
  const Globals& g_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<Api> api_;
  Transport transport_;
};

ApiRequest get(std::string path, std::map<std::string, std::string> query = {}) {
  ApiRequest r;
  r.method = "GET";
  r.path = std::move(path);
  r.query = std::move(query);
  return r;
}

ApiRequest post(std::string path, std::string body, std::map<std::string, std::string> query = {}) {
  ApiRequest r;
  r.method = "POST";
  r.path = std::move(path);
  r.body = std::move(body);
  r.query = std::move(query);
  return r;
}

std::string error_message(const ApiResponse& r) {
  try {
    const json j = r.json();
    std::string msg = j.value("message", std::string{});
    const std::string code = j.value("code", std::string{});
    if (!code.empty()) msg += " [" + code + "]";
    return msg.empty() ? r.body : msg;
  } catch (const json::exception&) {
    return r.body;
  }
}

void print_summary(std::ostream& out, const json& j);

// Prints a successful reply; text mode gets a flat key: value summary.
int finish(const Globals& g, const ApiResponse& r, std::ostream& out, std::ostream& err) {
  const int code = exit_code_for_status(r.status);
  if (code != kOk) {
    if (g.json_out) out << r.body << "\n";
    err << "error: " << error_message(r) << "\n";
    return code;
  }
  if (g.json_out) {
    out << r.json().dump(2) << "\n";
  } else {
    print_summary(out, r.json());
  }
  return kOk;
}

void print_summary(std::ostream& out, const json& j) {
  if (!j.is_object()) {
    out << j.dump(2) << "\n";
    return;
  }
  for (const auto& [k, v] : j.items()) {
    if (v.is_array()) {
      out << k << ": " << v.size() << (v.size() == 1 ? " entry" : " entries") << "\n";
      if (k == "rejected" || k == "errors" || k == "warnings") {
        for (const auto& e : v) out << "  " << (e.is_string() ? e.get<std::string>() : e.dump()) << "\n";
      }
    } else if (v.is_object()) {
      out << k << ": " << v.dump() << "\n";
    } else if (v.is_string()) {
      out << k << ": " << v.get<std::string>() << "\n";
    } else {
      out << k << ": " << v.dump() << "\n";
    }
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
  if (!f) throw Error(ErrorKind::internal, "io_error", path, "cannot write " + path);
}

int serve(Session& s, const std::string& host, int port, std::ostream& out, std::ostream& err) {
  Engine& engine = s.engine();
  Api api(engine);
  HttpServer server(api);
  // Block termination signals in every thread; a watcher thread receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  if (!server.bind(host, port)) {
    err << "error: cannot bind " << host << ":" << port << "\n";
    return kInternal;
  }
  out << "serving on http://" << host << ":" << port << " (data dir " << engine.config().data_dir << ", "
      << engine.last_seq() << " events)\n";
  for (const auto& w : engine.warnings()) err << "warning: " << w << "\n";
  out.flush();
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.serve();
  // serve() also returns on internal failure; wake the watcher so it can be joined.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Globals g;
  CLI::App app{"Winter manure-spreading detection triage: ingest, route, verify, report.", "landtriage"};
  app.require_subcommand(1);
  app.add_flag("--json", g.json_out, "Machine-readable JSON output");
  app.add_option("--data-dir", g.data_dir, "Local data directory (overrides config and LANDTRIAGE_DATA_DIR)");
  app.add_option("--config", g.config_path, "JSON service config file");
  app.add_option("--remote", g.remote, "Base URL of a running service, e.g. http://127.0.0.1:8080");
  app.add_option("--idempotency-key", g.idempotency_key, "Idempotency-Key for the mutating request");

  std::function<int(Session&)> action;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load the facility, field and verifier registry");
  std::string facilities, fields, verifiers;
  ingest->add_option("--facilities", facilities, "Facilities JSON array")->required()->check(CLI::ExistingFile);
  ingest->add_option("--fields", fields, "Permitted fields GeoJSON FeatureCollection")->required()->check(CLI::ExistingFile);
  ingest->add_option("--verifiers", verifiers, "Verifiers JSON array")->required()->check(CLI::ExistingFile);
  ingest->callback([&] {
    action = [&](Session& s) {
      ApiRequest r = post("/v1/registry", "");
      r.files = {{"facilities", read_file(facilities)}, {"fields", read_file(fields)}, {"verifiers", read_file(verifiers)}};
      return finish(g, s.send(r), out, err);
    };
  });

  // run add / run list
  auto* run_cmd = app.add_subcommand("run", "Model runs");
  run_cmd->require_subcommand(1);
  auto* run_add = run_cmd->add_subcommand("add", "Register a model run");
  std::string run_id, imagery_date, dispatched;
  run_add->add_option("--id", run_id, "Run id")->required();
  run_add->add_option("--imagery-date", imagery_date, "Capture date YYYY-MM-DD")->required();
  run_add->add_option("--dispatched", dispatched, "Dispatch date YYYY-MM-DD (default: capture date)");
  run_add->callback([&] {
    action = [&](Session& s) {
      json body{{"run_id", run_id}, {"imagery_date", imagery_date}, {"dispatched_on", dispatched.empty() ? imagery_date : dispatched}};
      return finish(g, s.send(post("/v1/runs", body.dump())), out, err);
    };
  });
  auto* run_list = run_cmd->add_subcommand("list", "List model runs");
  run_list->callback([&] { action = [&](Session& s) { return finish(g, s.send(get("/v1/runs")), out, err); }; });

  // detections add
  auto* dets = app.add_subcommand("detections", "Detection batches");
  dets->require_subcommand(1);
  auto* dets_add = dets->add_subcommand("add", "Ingest line-delimited detection records for a run");
  std::string det_run, det_file;
  dets_add->add_option("--run", det_run, "Run id")->required();
  dets_add->add_option("--file", det_file, "detections.jsonl")->required()->check(CLI::ExistingFile);
  dets_add->callback([&] {
    action = [&](Session& s) {
      return finish(g, s.send(post("/v1/runs/" + det_run + "/detections", read_file(det_file))), out, err);
    };
  });

  // route
  auto* route = app.add_subcommand("route", "Route a run's detections to an organisation");
  std::string route_run, route_org;
  route->add_option("--run", route_run, "Run id")->required();
  route->add_option("--org", route_org, "wdnr or elpc")->required()->check(CLI::IsMember({"wdnr", "elpc"}));
  route->callback([&] {
    action = [&](Session& s) {
      return finish(g, s.send(post("/v1/route/" + route_run, "", {{"org", route_org}})), out, err);
    };
  });

  // screen
  auto* screen = app.add_subcommand("screen", "Record a desk-screening decision");
  std::string scr_det, scr_decision, scr_reason, scr_note, scr_date;
  screen->add_option("--detection", scr_det, "Detection id")->required();
  screen->add_option("--decision", scr_decision, "accept or reject")->required()->check(CLI::IsMember({"accept", "reject"}));
  screen->add_option("--reason", scr_reason, "Rejection reason: vegetation, building, roadway, shadow, other");
  screen->add_option("--note", scr_note, "Screener note");
  screen->add_option("--decided-on", scr_date, "Decision date YYYY-MM-DD (default: today, UTC)");
  screen->callback([&] {
    action = [&](Session& s) {
      json body{{"decision", scr_decision}};
      if (!scr_reason.empty()) body["reason"] = scr_reason;
      if (!scr_note.empty()) body["note"] = scr_note;
      if (!scr_date.empty()) body["decided_on"] = scr_date;
      return finish(g, s.send(post("/v1/screening/" + scr_det, body.dump())), out, err);
    };
  });

  // respond
  auto* respond = app.add_subcommand("respond", "Bulk-import field responses from CSV");
  std::string resp_file;
  respond->add_option("--file", resp_file, "responses.csv")->required()->check(CLI::ExistingFile);
  respond->callback([&] {
    action = [&](Session& s) { return finish(g, s.send(post("/v1/responses/import", read_file(resp_file))), out, err); };
  });

  // determine
  auto* determine = app.add_subcommand("determine", "Bulk-import regulator determinations (JSON lines)");
  std::string detm_file;
  determine->add_option("--file", detm_file, "determinations.jsonl")->required()->check(CLI::ExistingFile);
  determine->callback([&] {
    action = [&](Session& s) {
      return finish(g, s.send(post("/v1/determinations/import", read_file(detm_file))), out, err);
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Print a trial report");
  std::string rep_name, rep_csv, rep_org;
  bool rep_screened = false;
  std::optional<double> rep_total_images, rep_top_cut, rep_claimed;
  std::string rep_grouping, rep_edges;
  std::vector<std::string> rep_params;
  std::vector<std::string> report_choices;
  for (const auto& [k, v] : kReportNames) report_choices.push_back(k);
  report->add_option("name", rep_name, "Report name")->required()->check(CLI::IsMember(report_choices));
  report->add_option("--csv", rep_csv, "Also write the report rows as CSV to this path");
  report->add_option("--org", rep_org, "wdnr or elpc")->check(CLI::IsMember({"wdnr", "elpc"}));
  report->add_flag("--screened-only", rep_screened, "confirmation: only desk-accepted items (wdnr)");
  report->add_option("--total-images", rep_total_images, "lift: images the model processed");
  report->add_option("--top-cut", rep_top_cut, "lift: lower score edge of the top bucket");
  report->add_option("--claimed-review-reduction", rep_claimed, "lift: claimed reduction to check, as a fraction");
  report->add_option("--grouping", rep_grouping, "groups: binary or category");
  report->add_option("--edges", rep_edges, "Comma-separated score bucket edges");
  report->add_option("--param", rep_params, "Extra query parameter key=value (repeatable)");
  report->callback([&] {
    action = [&](Session& s) {
      std::map<std::string, std::string> q;
      auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
      };
      if (!rep_org.empty()) q["org"] = rep_org;
      if (rep_screened) q["screened_only"] = "true";
      if (rep_total_images) q["total_images"] = num(*rep_total_images);
      if (rep_top_cut) q["top_cut"] = num(*rep_top_cut);
      if (rep_claimed) q["claimed_review_reduction"] = num(*rep_claimed);
      if (!rep_grouping.empty()) q["grouping"] = rep_grouping;
      if (!rep_edges.empty()) q["edges"] = rep_edges;
      for (const auto& p : rep_params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw_validation("invalid_argument", "param", "--param expects key=value, got '" + p + "'");
        q[p.substr(0, eq)] = p.substr(eq + 1);
      }
      const std::string name = kReportNames.at(rep_name);
      const ApiResponse r = s.send(get("/v1/reports/" + name, q));
      const int code = exit_code_for_status(r.status);
      if (code != kOk) return finish(g, r, out, err);
      const json body = r.json();
      if (!rep_csv.empty()) write_text_file(rep_csv, render_report_csv(name, body));
      if (g.json_out) {
        out << body.dump(2) << "\n";
      } else {
        out << render_report_text(name, body);
      }
      return kOk;
    };
  });

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic trial dataset directory");
  sim::SimParams sp;
  std::string sim_curve, sim_out = "simulated", sim_preset;
  simulate->add_option("--seed", sp.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--facilities", sp.facilities, "Number of permitted facilities")->capture_default_str();
  simulate->add_option("--runs", sp.runs, "Number of model runs")->capture_default_str();
  simulate->add_option("--verifiers", sp.verifiers, "Advocacy verifiers (0: one per five facilities)");
  simulate->add_option("--tpr-curve", sim_curve, "P(true | score): 'pl:s=p,...' or 'const:p'");
  simulate->add_option("--followup-rate", sp.followup_rate, "Share of assignments visited")->capture_default_str();
  simulate->add_option("--visibility-rate", sp.visibility_rate, "Share of visits with the spot visible")->capture_default_str();
  simulate->add_option("--preset", sim_preset, "Named dataset instead of a random one")->check(CLI::IsMember({"trial2023"}));
  simulate->add_option("--out", sim_out, "Output directory")->capture_default_str();
  simulate->callback([&] {
    action = [&](Session&) {
      if (!sim_curve.empty()) sp.curve = sim::TprCurve::parse(sim_curve);
      const Dataset d = sim_preset == "trial2023" ? sim::trial2023() : sim::simulate(sp);
      write_dataset(d, sim_out);
      json summary{{"out", sim_out},
                   {"name", d.manifest.value("name", "")},
                   {"runs", d.runs.size()},
                   {"detections", d.detections.size()},
                   {"screening", d.screening.size()},
                   {"responses", d.responses.size()},
                   {"determinations", d.determinations.size()}};
      if (g.json_out) {
        out << summary.dump(2) << "\n";
      } else {
        print_summary(out, summary);
      }
      return kOk;
    };
  });

  // import
  auto* import = app.add_subcommand("import", "Submit a whole dataset directory through the API");
  std::string imp_dir;
  import->add_option("--dir", imp_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  import->callback([&] {
    action = [&](Session& s) {
      const Transport& t = s.transport();
      const json summary = import_dataset(imp_dir, t);
      if (g.json_out) {
        out << summary.dump(2) << "\n";
      } else {
        print_summary(out, summary);
      }
      return kOk;
    };
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service over the local data directory");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Port")->capture_default_str()->check(CLI::Range(1, 65535));
  serve_cmd->callback([&] {
    action = [&](Session& s) {
      if (!g.remote.empty()) throw_validation("invalid_argument", "remote", "serve runs locally; drop --remote");
      return serve(s, host, port, out, err);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kUsage;
  }

  Session session(g);
  try {
    return action(session);
  } catch (const Error& e) {
    err << "error: " << e.what() << " [" << e.code() << "]\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace landtriage::cli
