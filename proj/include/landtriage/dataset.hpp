#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "landtriage/api.hpp"
#include "landtriage/compliance.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/fieldops.hpp"
#include "landtriage/routing.hpp"

namespace landtriage {

struct ScreeningRecord {
  std::string detection_id;
  routing::Decision decision = routing::Decision::accept;
  std::optional<routing::RejectReason> reason;
  std::string note;
  Date decided_on;
};

struct ObservationSeries {
  std::string detection_id;
  std::vector<compliance::Observation> observations;
};

// Raw operator inputs for a whole trial, in the order an operator would submit them.
//
// Directory layout:
//   manifest.json  facilities.json  fields.geojson  verifiers.json  runs.json
//   detections/<run_id>.jsonl  screening.jsonl  responses.csv  determinations.jsonl
//   observations.jsonl  incidentals.jsonl  [truth.jsonl]
struct Dataset {
  nlohmann::json manifest = nlohmann::json::object();
  nlohmann::json facilities = nlohmann::json::array();
  nlohmann::json fields = {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  nlohmann::json verifiers = nlohmann::json::array();
  std::vector<detections::ModelRun> runs;
  std::vector<detections::Detection> detections;
  std::vector<ScreeningRecord> screening;
  std::vector<fieldops::FieldResponse> responses;
  std::vector<fieldops::Determination> determinations;
  std::vector<ObservationSeries> observations;
  std::vector<detections::IncidentalReport> incidentals;
  // Simulator ground truth by detection_id; not imported.
  std::map<std::string, bool> truth;
};

void write_dataset(const Dataset& d, const std::filesystem::path& dir);

using Transport = std::function<ApiResponse(const ApiRequest&)>;

// Submits a dataset directory through the API. Every request carries an
// Idempotency-Key derived from the manifest, so an interrupted import can be rerun.
// Throws on the first failed request or rejected record.
nlohmann::json import_dataset(const std::filesystem::path& dir, const Transport& send);

// Shorthand for importing into an in-process engine.
nlohmann::json import_dataset(const std::filesystem::path& dir, Engine& engine);

std::string read_file(const std::filesystem::path& p);

}  // namespace landtriage
