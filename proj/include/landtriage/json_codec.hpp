#pragma once

#include "json.hpp"
#include "landtriage/compliance.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/fieldops.hpp"
#include "landtriage/routing.hpp"
#include "landtriage/state.hpp"

// Wire and storage forms of the engine's records. Readers throw validation
// Error with the offending field path.
namespace landtriage::codec {

using nlohmann::json;

json to_json(const geo::GeoBBox& b);
geo::GeoBBox bbox_from_json(const json& j, std::string_view ctx);

json to_json(const detections::ModelRun& r);
detections::ModelRun run_from_json(const json& j);

json to_json(const routing::ScreeningItem& s);
routing::ScreeningItem screening_from_json(const json& j);

json to_json(const routing::Assignment& a);
routing::Assignment assignment_from_json(const json& j);

json to_json(const fieldops::FieldResponse& r);
// response_id defaults to "resp-<assignment_id>".
fieldops::FieldResponse response_from_json(const json& j);

json to_json(const compliance::SpreadEvent& e);
compliance::SpreadEvent spread_event_from_json(const json& j, std::string_view ctx);

json to_json(const fieldops::Determination& d);
// determination_id defaults to "det-<assignment_id>"; decided_on to `fallback_date`.
fieldops::Determination determination_from_json(const json& j, Date fallback_date);

json to_json(const compliance::Observation& o);
compliance::Observation observation_from_json(const json& j, std::string_view ctx);

json to_json(const detections::IncidentalReport& r);
detections::IncidentalReport incidental_from_json(const json& j);

json to_json(const fieldops::PacketManifest& m);
json to_json(const detections::RecordError& e);

// Canonical, order-stable form of the whole state; snapshots and digests use it.
json state_to_json(const TrialState& s);
TrialState state_from_json(const json& j);

}  // namespace landtriage::codec
