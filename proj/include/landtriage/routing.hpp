#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "landtriage/date.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/registry.hpp"

namespace landtriage::routing {

enum class ScreeningStatus { pending, accepted, rejected };
constexpr auto enum_table(ScreeningStatus) {
  using P = std::pair<ScreeningStatus, std::string_view>;
  return std::array{P{ScreeningStatus::pending, "pending"}, P{ScreeningStatus::accepted, "accepted"},
                    P{ScreeningStatus::rejected, "rejected"}};
}

enum class RejectReason { vegetation, building, roadway, shadow, other };
constexpr auto enum_table(RejectReason) {
  using P = std::pair<RejectReason, std::string_view>;
  return std::array{P{RejectReason::vegetation, "vegetation"}, P{RejectReason::building, "building"},
                    P{RejectReason::roadway, "roadway"}, P{RejectReason::shadow, "shadow"},
                    P{RejectReason::other, "other"}};
}

enum class Decision { accept, reject };
constexpr auto enum_table(Decision) {
  using P = std::pair<Decision, std::string_view>;
  return std::array{P{Decision::accept, "accept"}, P{Decision::reject, "reject"}};
}

enum class Policy { nearest_exclusive, multi };
constexpr auto enum_table(Policy) {
  using P = std::pair<Policy, std::string_view>;
  return std::array{P{Policy::nearest_exclusive, "nearest_exclusive"}, P{Policy::multi, "multi"}};
}

struct ScreeningItem {
  std::string detection_id;
  std::string run_id;
  double score = 0.0;
  Date queued_on;
  ScreeningStatus status = ScreeningStatus::pending;
  std::optional<RejectReason> reject_reason;
  std::string screener_note;
  std::optional<Date> decided_on;
  // Permitted fields the detection box touches, ordered by field_id.
  std::vector<std::string> field_ids;
};

struct Assignment {
  std::string assignment_id;
  std::string detection_id;
  std::string run_id;
  Org org = Org::elpc;
  std::optional<std::string> verifier_id;  // elpc
  std::optional<std::string> region_tag;   // wdnr: permittee facility of the first touched field
  Date dispatched_on;
  std::optional<int> rank;  // elpc, 1-based
  std::optional<double> distance_m;
};

inline constexpr double kDefaultScoreThreshold = 0.5;
inline constexpr double kDefaultRadiusM = 25'000.0;
inline constexpr int kDefaultTopK = 5;

// One pending item per detection scoring at least `score_threshold` whose box
// touches a permitted field; ordered by score descending, then detection_id.
std::vector<ScreeningItem> route_wdnr(const detections::ModelRun& run, std::span<const detections::Detection> dets,
                                      const registry::Registry& reg,
                                      double score_threshold = kDefaultScoreThreshold);

// pending -> accepted|rejected. Rejection needs a reason. Returns the updated item;
// throws conflict when the item was already decided.
ScreeningItem decide(const ScreeningItem& item, Decision decision, std::optional<RejectReason> reason,
                     std::string note, Date decided_on);

// The regulator assignment created by an accepted item.
Assignment wdnr_assignment(const ScreeningItem& accepted, const registry::Registry& reg);

struct ElpcParams {
  double radius_m = kDefaultRadiusM;
  int top_k = kDefaultTopK;
  Policy policy = Policy::nearest_exclusive;
};

// Per active elpc verifier, the top_k highest-scoring eligible detections ranked
// 1..k (ties by detection_id). Ordered by verifier_id, then rank.
std::vector<Assignment> route_elpc(const detections::ModelRun& run, std::span<const detections::Detection> dets,
                                   const registry::Registry& reg, const ElpcParams& params = {});

}  // namespace landtriage::routing
