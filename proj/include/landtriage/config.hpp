#pragma once

#include <cstddef>
#include <string>

#include "json.hpp"
#include "landtriage/compliance.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/routing.hpp"

namespace landtriage {

struct ServiceConfig {
  std::string data_dir = "landtriage-data";
  double score_threshold = routing::kDefaultScoreThreshold;
  double radius_m = routing::kDefaultRadiusM;
  int top_k = routing::kDefaultTopK;
  double aoi_side_m = geo::kDefaultAoiSideM;
  compliance::SeasonalWindow rule_window;
  routing::Policy routing_policy = routing::Policy::nearest_exclusive;
  int boundary_days = compliance::kDefaultBoundaryDays;
  // Write a state snapshot after this many events; 0 disables snapshots.
  std::size_t snapshot_every = 500;
  // fsync after every append.
  bool fsync = true;
  double incidental_score_floor = 0.2;
  double incidental_match_radius_m = 250.0;
  int incidental_match_window_days = 7;

  // Unknown keys are rejected so typos do not silently fall back to defaults.
  static ServiceConfig from_json(const nlohmann::json& j);
  // Reads `path` when non-empty, then applies LANDTRIAGE_DATA_DIR.
  static ServiceConfig load(const std::string& path);

  nlohmann::json to_json() const;
  void validate() const;

  routing::ElpcParams elpc_params() const { return {radius_m, top_k, routing_policy}; }
  detections::IncidentalParams incidental_params() const {
    return {incidental_score_floor, aoi_side_m, incidental_match_radius_m, incidental_match_window_days};
  }
};

}  // namespace landtriage
