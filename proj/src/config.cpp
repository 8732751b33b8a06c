#include "landtriage/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "landtriage/error.hpp"
#include "landtriage/json_util.hpp"

namespace landtriage {

using nlohmann::json;
using namespace json_util;

namespace {

// "MM-DD"
std::pair<unsigned, unsigned> parse_month_day(const std::string& s, const std::string& field) {
  unsigned m = 0, d = 0;
  char tail = 0;
  if (s.size() != 5 || std::sscanf(s.c_str(), "%2u-%2u%c", &m, &d, &tail) != 2) {
    throw_validation("invalid_date", field, field + " must be MM-DD");
  }
  if (!std::chrono::month_day{std::chrono::month{m}, std::chrono::day{d}}.ok()) {
    throw_validation("invalid_date", field, field + " is not a calendar day");
  }
  return {m, d};
}

std::string month_day(unsigned m, unsigned d) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u-%02u", m, d);
  return buf;
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j) {
  static const std::set<std::string> known = {
      "data_dir",       "score_threshold",        "radius_m",           "top_k",
      "aoi_side_m",     "rule_window_start",      "rule_window_end",    "animal_unit_threshold",
      "routing_policy", "boundary_days",          "snapshot_every",     "incidental_score_floor",
      "incidental_match_radius_m", "incidental_match_window_days", "fsync"};
  if (!j.is_object()) throw_validation("invalid_type", "config", "config must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw_validation("unknown_key", k, "unknown config key '" + k + "'");
  }
  ServiceConfig c;
  c.data_dir = opt_string(j, "data_dir", "").value_or(c.data_dir);
  c.score_threshold = opt_number(j, "score_threshold", "").value_or(c.score_threshold);
  c.radius_m = opt_number(j, "radius_m", "").value_or(c.radius_m);
  c.top_k = static_cast<int>(opt_number(j, "top_k", "").value_or(c.top_k));
  c.aoi_side_m = opt_number(j, "aoi_side_m", "").value_or(c.aoi_side_m);
  if (auto s = opt_string(j, "rule_window_start", "")) {
    std::tie(c.rule_window.start_month, c.rule_window.start_day) = parse_month_day(*s, "rule_window_start");
  }
  if (auto s = opt_string(j, "rule_window_end", "")) {
    std::tie(c.rule_window.end_month, c.rule_window.end_day) = parse_month_day(*s, "rule_window_end");
  }
  c.rule_window.animal_unit_threshold =
      opt_number(j, "animal_unit_threshold", "").value_or(c.rule_window.animal_unit_threshold);
  c.routing_policy = opt_enum<routing::Policy>(j, "routing_policy", "").value_or(c.routing_policy);
  c.boundary_days = static_cast<int>(opt_number(j, "boundary_days", "").value_or(c.boundary_days));
  c.snapshot_every = static_cast<std::size_t>(opt_number(j, "snapshot_every", "").value_or(double(c.snapshot_every)));
  c.fsync = opt_bool(j, "fsync", "").value_or(c.fsync);
  c.incidental_score_floor = opt_number(j, "incidental_score_floor", "").value_or(c.incidental_score_floor);
  c.incidental_match_radius_m = opt_number(j, "incidental_match_radius_m", "").value_or(c.incidental_match_radius_m);
  c.incidental_match_window_days =
      static_cast<int>(opt_number(j, "incidental_match_window_days", "").value_or(c.incidental_match_window_days));
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const std::string& path) {
  ServiceConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw_not_found("config_not_found", "config", "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw_validation("malformed_json", "config", "config file is not valid JSON");
    c = from_json(j);
  }
  if (const char* env = std::getenv("LANDTRIAGE_DATA_DIR"); env && *env) c.data_dir = env;
  c.validate();
  return c;
}

json ServiceConfig::to_json() const {
  return {{"data_dir", data_dir},
          {"score_threshold", score_threshold},
          {"radius_m", radius_m},
          {"top_k", top_k},
          {"aoi_side_m", aoi_side_m},
          {"rule_window_start", month_day(rule_window.start_month, rule_window.start_day)},
          {"rule_window_end", month_day(rule_window.end_month, rule_window.end_day)},
          {"animal_unit_threshold", rule_window.animal_unit_threshold},
          {"routing_policy", to_string(routing_policy)},
          {"boundary_days", boundary_days},
          {"snapshot_every", snapshot_every},
          {"fsync", fsync},
          {"incidental_score_floor", incidental_score_floor},
          {"incidental_match_radius_m", incidental_match_radius_m},
          {"incidental_match_window_days", incidental_match_window_days}};
}

void ServiceConfig::validate() const {
  if (!(score_threshold > 0.0 && score_threshold <= 1.0)) {
    throw_validation("invalid_config", "score_threshold", "score_threshold must be in (0, 1]");
  }
  if (!(radius_m > 0.0)) throw_validation("invalid_config", "radius_m", "radius_m must be positive");
  if (top_k < 1) throw_validation("invalid_config", "top_k", "top_k must be at least 1");
  if (!(aoi_side_m > 0.0)) throw_validation("invalid_config", "aoi_side_m", "aoi_side_m must be positive");
  if (!(rule_window.animal_unit_threshold > 0.0)) {
    throw_validation("invalid_config", "animal_unit_threshold", "animal_unit_threshold must be positive");
  }
  if (std::pair{rule_window.end_month, rule_window.end_day} < std::pair{rule_window.start_month, rule_window.start_day}) {
    throw_validation("invalid_config", "rule_window_end", "rule window must not wrap the year end");
  }
  if (boundary_days < 0) throw_validation("invalid_config", "boundary_days", "boundary_days must be non-negative");
  if (!(incidental_score_floor >= 0.0 && incidental_score_floor <= 1.0)) {
    throw_validation("invalid_config", "incidental_score_floor", "incidental_score_floor must be in [0, 1]");
  }
  if (!(incidental_match_radius_m >= 0.0) || incidental_match_window_days < 0) {
    throw_validation("invalid_config", "incidental_match_radius_m", "incidental match tolerances must be non-negative");
  }
}

}  // namespace landtriage
