#include "landtriage/routing.hpp"

#include <algorithm>
#include <map>

#include "landtriage/error.hpp"

namespace landtriage::routing {

namespace {

bool by_score_then_id(double sa, const std::string& ia, double sb, const std::string& ib) {
  if (sa != sb) return sa > sb;
  return ia < ib;
}

}  // namespace

std::vector<ScreeningItem> route_wdnr(const detections::ModelRun& run, std::span<const detections::Detection> dets,
                                      const registry::Registry& reg, double score_threshold) {
  std::vector<ScreeningItem> out;
  for (const auto& d : dets) {
    if (d.run_id != run.run_id || d.score < score_threshold) continue;
    auto fields = reg.fields_intersecting(d.bbox);
    if (fields.empty()) continue;
    ScreeningItem item;
    item.detection_id = d.detection_id;
    item.run_id = run.run_id;
    item.score = d.score;
    item.queued_on = run.dispatched_on;
    for (const auto* f : fields) item.field_ids.push_back(f->field_id);
    out.push_back(std::move(item));
  }
  std::sort(out.begin(), out.end(), [](const ScreeningItem& a, const ScreeningItem& b) {
    return by_score_then_id(a.score, a.detection_id, b.score, b.detection_id);
  });
  return out;
}

ScreeningItem decide(const ScreeningItem& item, Decision decision, std::optional<RejectReason> reason,
                     std::string note, Date decided_on) {
  if (item.status != ScreeningStatus::pending) {
    throw_conflict("already_screened", "detection_id",
                   "detection " + item.detection_id + " was already " + std::string(to_string(item.status)));
  }
  if (decision == Decision::reject && !reason) {
    throw_validation("missing_reason", "reason", "rejecting a detection requires a reason");
  }
  if (decided_on < item.queued_on) {
    throw_validation("decided_before_queue", "decided_on", "decided_on precedes the date the item was queued");
  }
  ScreeningItem out = item;
  out.status = decision == Decision::accept ? ScreeningStatus::accepted : ScreeningStatus::rejected;
  out.reject_reason = decision == Decision::reject ? reason : std::nullopt;
  out.screener_note = std::move(note);
  out.decided_on = decided_on;
  return out;
}

Assignment wdnr_assignment(const ScreeningItem& accepted, const registry::Registry& reg) {
  Assignment a;
  a.assignment_id = "wdnr-" + accepted.detection_id;
  a.detection_id = accepted.detection_id;
  a.run_id = accepted.run_id;
  a.org = Org::wdnr;
  if (!accepted.field_ids.empty()) {
    if (const auto* f = reg.find_field(accepted.field_ids.front())) a.region_tag = f->permittee_facility_id;
  }
  a.dispatched_on = accepted.decided_on.value_or(accepted.queued_on);
  return a;
}

std::vector<Assignment> route_elpc(const detections::ModelRun& run, std::span<const detections::Detection> dets,
                                   const registry::Registry& reg, const ElpcParams& params) {
  if (params.top_k < 1) throw_validation("invalid_top_k", "top_k", "top_k must be at least 1");
  if (!(params.radius_m >= 0.0)) throw_validation("invalid_radius", "radius_m", "radius_m must be >= 0");

  struct Candidate {
    const detections::Detection* det;
    double distance_m;
  };
  std::map<std::string, std::vector<Candidate>> eligible;  // verifier_id -> candidates
  for (const auto& d : dets) {
    if (d.run_id != run.run_id) continue;
    for (const auto& hit : reg.verifiers_within(d.centroid(), params.radius_m)) {
      if (hit.verifier->org != Org::elpc) continue;
      eligible[hit.verifier->verifier_id].push_back({&d, hit.distance_m});
      if (params.policy == Policy::nearest_exclusive) break;
    }
  }

  std::vector<Assignment> out;
  for (auto& [verifier_id, cands] : eligible) {
    const std::size_t k = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(params.top_k));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        return by_score_then_id(a.det->score, a.det->detection_id, b.det->score, b.det->detection_id);
                      });
    for (std::size_t i = 0; i < k; ++i) {
      Assignment a;
      a.assignment_id = "elpc-" + cands[i].det->detection_id + "-" + verifier_id;
      a.detection_id = cands[i].det->detection_id;
      a.run_id = run.run_id;
      a.org = Org::elpc;
      a.verifier_id = verifier_id;
      a.dispatched_on = run.dispatched_on;
      a.rank = static_cast<int>(i + 1);
      a.distance_m = cands[i].distance_m;
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace landtriage::routing
