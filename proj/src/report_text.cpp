#include "landtriage/report_text.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace landtriage {

using nlohmann::json;

namespace {

struct Table {
  std::string title;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
};

std::string cell(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  return v.dump();
}

std::string bucket_label(const json& row) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "[%.2f,%.2f)", row["lo"].get<double>(), row["hi"].get<double>());
  return buf;
}

std::vector<Table> tables_for(const std::string& name, const json& r) {
  std::vector<Table> out;
  if (name == "confirmation_by_bucket") {
    Table t{"confirmation by score bucket (" + cell(r["org"]) + (r["screened_only"].get<bool>() ? ", screened only" : "") + ")",
            {"bucket", "sent", "followed", "visible", "confirmed", "denominator", "rate", "ci_low", "ci_high"}, {}};
    for (const auto& b : r["buckets"]) {
      t.rows.push_back({bucket_label(b), cell(b["n_sent"]), cell(b["n_followed"]), cell(b["n_visible"]),
                        cell(b["n_confirmed"]), cell(b["n_denominator"]), cell(b["rate"]), cell(b["ci_low"]),
                        cell(b["ci_high"])});
    }
    const auto& tot = r["totals"];
    t.rows.push_back({"total", cell(tot["sent"]), cell(tot["followed"]), cell(tot["visible"]), cell(tot["confirmed"]), "", "",
                      "", ""});
    out.push_back(std::move(t));
  } else if (name == "totals") {
    Table t{"trial totals", {"org", "sent", "accepted", "followed", "visible", "confirmed"}, {}};
    for (const char* org : {"elpc", "wdnr"}) {
      const auto& o = r[org];
      t.rows.push_back({org, cell(o["sent"]), cell(o["accepted"]), cell(o["followed"]), cell(o["visible"]),
                        cell(o["confirmed"])});
    }
    out.push_back(std::move(t));
  } else if (name == "lift") {
    Table t{"lift", {"metric", "value"}, {}};
    for (const char* k : {"review_reduction", "base_rate", "selected_rate", "overall_lift", "top_lift"}) {
      t.rows.push_back({k, cell(r[k])});
    }
    for (const auto& [k, v] : r["inputs"].items()) t.rows.push_back({"input." + k, cell(v)});
    out.push_back(std::move(t));
    if (!r["notes"].empty()) {
      Table n{"notes", {"note"}, {}};
      for (const auto& s : r["notes"]) n.rows.push_back({cell(s)});
      out.push_back(std::move(n));
    }
  } else if (name == "agreement") {
    Table t{"detections sent to both organizations", {"cell", "n", "elpc_confirmed", "elpc_rate", "wdnr_confirmed", "wdnr_rate"}, {}};
    for (const char* k : {"both_followed", "elpc_only", "wdnr_only", "neither"}) {
      const auto& c = r[k];
      t.rows.push_back({k, cell(c["n"]), cell(c["elpc_confirmed"]), cell(c["elpc_rate"]), cell(c["wdnr_confirmed"]),
                        cell(c["wdnr_rate"])});
    }
    t.rows.push_back({"total", cell(r["total"]), "", "", "", ""});
    out.push_back(std::move(t));
  } else if (name == "compliance") {
    Table t{"compliance of confirmed events", {"category", "count"}, {}};
    for (const auto& [k, v] : r["counts"].items()) t.rows.push_back({k, cell(v)});
    t.rows.push_back({"confirmed", cell(r["confirmed"])});
    t.rows.push_back({"no_manure", cell(r["no_manure"])});
    out.push_back(std::move(t));
    Table s{"shares", {"share", "value"}, {}};
    for (const char* k : {"share_noncompliant", "share_cracks", "share_afo_post_window"}) s.rows.push_back({k, cell(r[k])});
    out.push_back(std::move(s));
    if (r.contains("corroboration")) {
      const auto& c = r["corroboration"];
      Table p{"pre-window corroboration", {"outcome", "count"}, {}};
      for (const auto& [k, v] : c["counts"].items()) p.rows.push_back({k, cell(v)});
      p.rows.push_back({"total", cell(c["total"])});
      p.rows.push_back({"substantiation_rate", cell(c["substantiation_rate"])});
      out.push_back(std::move(p));
    }
  } else if (name == "process") {
    Table t{"follow-up by score bucket", {"bucket", "sent", "followed", "visible", "confirmed", "followup_rate"}, {}};
    for (const auto& b : r["followup_by_bucket"]) {
      t.rows.push_back({bucket_label(b), cell(b["n_sent"]), cell(b["n_followed"]), cell(b["n_visible"]),
                        cell(b["n_confirmed"]), cell(b["rate"])});
    }
    out.push_back(std::move(t));
    Table s{"summary", {"metric", "value"}, {}};
    for (const char* k : {"sent", "visited", "visible", "followup_rate", "visibility_rate", "share_within_one_day",
                          "max_latency_days"}) {
      s.rows.push_back({k, cell(r[k])});
    }
    out.push_back(std::move(s));
    Table h{"latency (days from dispatch to visit)", {"days", "responses"}, {}};
    for (const auto& [k, v] : r["latency_histogram"].items()) h.rows.push_back({k, cell(v)});
    out.push_back(std::move(h));
  } else if (name == "group_comparison") {
    Table t{"confirmed events by ruling (" + cell(r["grouping"]) + ")", {"metric", "group", "n", "mean", "sd", "ci_half_width"}, {}};
    for (const auto& [metric, groups] : r["metrics"].items()) {
      for (const auto& g : groups) {
        t.rows.push_back({metric, cell(g["group"]), cell(g["n"]), cell(g["mean"]), cell(g["sd"]), cell(g["ci_half_width"])});
      }
    }
    out.push_back(std::move(t));
  } else if (name == "confidence_crosstab") {
    Table t{"reporter confidence by score bucket", {"bucket", "high", "medium", "low"}, {}};
    const auto& e = r["edges"];
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      json row{{"lo", e[i]}, {"hi", e[i + 1]}};
      t.rows.push_back({bucket_label(row), cell(r["high"][i]), cell(r["medium"][i]), cell(r["low"][i])});
    }
    out.push_back(std::move(t));
  } else if (name == "incidentals") {
    Table t{"incidental reports", {"category", "count"}, {}};
    for (const char* k : {"non_geocodable", "detected_below_threshold", "outside_aoi", "missed_in_aoi", "detected", "total"}) {
      t.rows.push_back({k, cell(r[k])});
    }
    out.push_back(std::move(t));
  } else {
    Table t{name, {"key", "value"}, {}};
    for (const auto& [k, v] : r.items()) t.rows.push_back({k, cell(v)});
    out.push_back(std::move(t));
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_report_text(const std::string& name, const json& report) {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : tables_for(name, report)) {
    if (!first) os << "\n";
    first = false;
    os << t.title << "\n";
    std::vector<std::size_t> width(t.headers.size());
    for (std::size_t i = 0; i < t.headers.size(); ++i) width[i] = t.headers[i].size();
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
      std::string s;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        // First column left-aligned, numbers right-aligned.
        const std::string pad(width[i] - cells[i].size(), ' ');
        s += i == 0 ? cells[i] + pad : pad + cells[i];
        if (i + 1 < cells.size()) s += "  ";
      }
      while (!s.empty() && s.back() == ' ') s.pop_back();
      os << s << "\n";
    };
    line(t.headers);
    std::vector<std::string> rule;
    for (auto w : width) rule.emplace_back(w, '-');
    line(rule);
    for (const auto& row : t.rows) line(row);
  }
  return os.str();
}

std::string render_report_csv(const std::string& name, const json& report) {
  const auto tables = tables_for(name, report);
  std::ostringstream os;
  const auto& t = tables.front();
  for (std::size_t i = 0; i < t.headers.size(); ++i) os << (i ? "," : "") << csv_field(t.headers[i]);
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
    os << "\n";
  }
  return os.str();
}

}  // namespace landtriage
