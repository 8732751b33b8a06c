#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "landtriage/compliance.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/fieldops.hpp"
#include "landtriage/registry.hpp"
#include "landtriage/routing.hpp"

namespace landtriage {

// Everything the engine knows, rebuilt from the event log. Maps keep iteration
// order deterministic so reports are byte-stable.
struct TrialState {
  std::shared_ptr<const registry::Registry> registry = std::make_shared<registry::Registry>();
  std::map<std::string, detections::ModelRun> runs;
  std::map<std::string, detections::Detection> detections;
  std::map<std::string, std::vector<std::string>> run_detections;  // ingest order
  std::map<std::string, routing::ScreeningItem> screening;         // by detection_id
  std::set<std::pair<std::string, Org>> routed;                    // (run_id, org)
  std::map<std::string, routing::Assignment> assignments;
  std::map<std::string, fieldops::FieldResponse> responses;  // by response_id
  std::map<std::string, std::string> response_by_assignment;
  std::map<std::string, std::vector<fieldops::FieldResponse>> response_history;  // superseded versions
  std::map<std::string, fieldops::Determination> determinations;
  std::map<std::string, std::string> determination_by_assignment;
  std::map<std::string, std::vector<compliance::Observation>> observations;  // by detection_id
  std::map<std::string, detections::IncidentalReport> incidentals;

  std::vector<detections::Detection> run_detection_list(const std::string& run_id) const;
  const fieldops::FieldResponse* response_for(const std::string& assignment_id) const;
  const fieldops::Determination* determination_for(const std::string& assignment_id) const;
};

}  // namespace landtriage
