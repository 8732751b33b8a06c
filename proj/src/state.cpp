#include "landtriage/state.hpp"

namespace landtriage {

std::vector<detections::Detection> TrialState::run_detection_list(const std::string& run_id) const {
  std::vector<detections::Detection> out;
  auto it = run_detections.find(run_id);
  if (it == run_detections.end()) return out;
  out.reserve(it->second.size());
  for (const auto& id : it->second) out.push_back(detections.at(id));
  return out;
}

const fieldops::FieldResponse* TrialState::response_for(const std::string& assignment_id) const {
  auto it = response_by_assignment.find(assignment_id);
  return it == response_by_assignment.end() ? nullptr : &responses.at(it->second);
}

const fieldops::Determination* TrialState::determination_for(const std::string& assignment_id) const {
  auto it = determination_by_assignment.find(assignment_id);
  return it == determination_by_assignment.end() ? nullptr : &determinations.at(it->second);
}

}  // namespace landtriage
