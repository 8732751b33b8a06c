#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "landtriage/compliance.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/state.hpp"

namespace landtriage::analytics {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval for successes/n. n == 0 gives [0, 1].
Interval wilson_interval(std::size_t successes, std::size_t n, double z = kZ95);

// 0.0, 0.1, ..., 1.0
std::vector<double> default_edges();

inline constexpr std::size_t kNoBucket = static_cast<std::size_t>(-1);
// Buckets are [e_i, e_{i+1}) except the last, which also takes its upper edge.
std::size_t bucket_of(double score, std::span<const double> edges);

struct BucketRow {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_sent = 0;
  std::size_t n_followed = 0;
  std::size_t n_visible = 0;
  std::size_t n_confirmed = 0;
  std::size_t n_denominator = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
};

struct BucketedRates {
  Org org = Org::elpc;
  bool screened_only = false;
  std::vector<double> edges;
  std::vector<BucketRow> rows;
  std::size_t total_sent = 0;
  std::size_t total_followed = 0;
  std::size_t total_visible = 0;
  std::size_t total_confirmed = 0;
};

// Confirmed over sent, or over screening-accepted when screened_only (regulator only).
BucketedRates confirmation_by_bucket(const TrialState& s, Org org, bool screened_only,
                                     std::span<const double> edges = {});

// Pooled confirmed/denominator over rows whose lower edge is >= cut.
std::optional<double> rate_at_or_above(const BucketedRates& b, double cut);

struct TrialTotals {
  Org org = Org::elpc;
  std::size_t sent = 0;
  std::size_t accepted = 0;  // regulator desk screening
  std::size_t followed = 0;
  std::optional<std::size_t> visible;  // advocacy verifiers only
  std::size_t confirmed = 0;
};

TrialTotals trial_totals(const TrialState& s, Org org);

struct LiftMetrics {
  double review_reduction = 0.0;
  double base_rate = 0.0;
  double selected_rate = 0.0;
  double overall_lift = 0.0;
  double top_lift = 0.0;
  std::vector<std::string> notes;
};

// Throws validation Error unless total_images >= sent >= confirmed >= 0 with
// non-zero denominators. A claimed review reduction that the inputs do not
// reproduce (beyond 0.05 points) is flagged in notes.
LiftMetrics lift_metrics(double total_images, double sent, double confirmed, double top_bucket_rate,
                         std::optional<double> claimed_review_reduction = std::nullopt);

struct AgreementCell {
  std::size_t n = 0;
  std::size_t elpc_confirmed = 0;
  std::size_t wdnr_confirmed = 0;
  std::optional<double> elpc_rate;  // only where the advocacy side followed up
  std::optional<double> wdnr_rate;  // only where the regulator followed up
};

struct AgreementTable {
  AgreementCell both;
  AgreementCell elpc_only;
  AgreementCell wdnr_only;
  AgreementCell neither;

  std::size_t total() const { return both.n + elpc_only.n + wdnr_only.n + neither.n; }
};

// Detections that reached both organizations, crossed by who followed up.
AgreementTable agreement_table(const TrialState& s);

struct ComplianceBreakdown {
  std::map<compliance::Compliance, std::size_t> counts;
  std::size_t confirmed = 0;
  std::size_t no_manure = 0;
  std::optional<double> share_noncompliant;
  std::optional<double> share_cracks;
  std::optional<double> share_afo_post_window;
};

ComplianceBreakdown compliance_breakdown(const TrialState& s);

struct CorroborationSummary {
  std::map<compliance::Corroboration, std::size_t> counts;
  std::size_t total = 0;
  std::optional<double> substantiation_rate;
  std::vector<std::pair<std::string, compliance::Corroboration>> per_detection;
};

// Runs pre-window corroboration over every pre-window determination with imagery observations.
CorroborationSummary corroboration_summary(const TrialState& s, const compliance::SeasonalWindow& w,
                                           int boundary_days = compliance::kDefaultBoundaryDays);

struct ProcessMetrics {
  std::vector<BucketRow> followup_by_bucket;  // rate = followed / sent
  std::size_t sent = 0;
  std::size_t visited = 0;
  std::size_t visible = 0;
  double followup_rate = 0.0;
  double visibility_rate = 0.0;
  std::map<int, std::size_t> latency_histogram;
  double share_within_one_day = 0.0;
  int max_latency_days = 0;
};

ProcessMetrics process_metrics(const TrialState& s, std::span<const double> edges = {});

// Two-sided t-interval half-width for the mean; absent for n < 2.
std::optional<double> t_half_width(std::span<const double> values, double level = 0.95);

struct GroupStats {
  std::string group;
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;
  std::optional<double> ci_half_width;
};

GroupStats summarize(std::string group, std::span<const double> values, double level = 0.95);

enum class Grouping { binary, category };
constexpr auto enum_table(Grouping) {
  using P = std::pair<Grouping, std::string_view>;
  return std::array{P{Grouping::binary, "binary"}, P{Grouping::category, "category"}};
}

struct GroupComparison {
  std::string metric;
  std::vector<GroupStats> groups;
};

// Confirmed regulator events grouped by ruling; metrics "score" and "bbox_area".
// binary: violation -> "noncompliant", other compliant rulings -> "compliant".
std::vector<GroupComparison> group_comparison(
    const TrialState& s, Grouping grouping = Grouping::binary,
    std::vector<compliance::Compliance> excluded = {compliance::Compliance::compliant_other,
                                                    compliance::Compliance::indeterminate});

struct ConfidenceCrosstab {
  std::vector<double> edges;
  // counts[c][b]: confidence level c (high, medium, low) in score bucket b.
  std::array<std::vector<std::size_t>, 3> counts;
};

// Confirmed advocacy responses that carry a self-reported confidence.
ConfidenceCrosstab reporter_confidence_crosstab(const TrialState& s, std::span<const double> edges = {});

detections::IncidentalBreakdown incidental_breakdown(const TrialState& s, const detections::IncidentalParams& p);

// JSON forms served by the report endpoints. Rates carry 3 decimals, lifts 1.
double round_to(double v, int decimals);
nlohmann::json to_json(const BucketedRates& b);
nlohmann::json to_json(const TrialTotals& t);
nlohmann::json to_json(const LiftMetrics& l);
nlohmann::json to_json(const AgreementTable& t);
nlohmann::json to_json(const ComplianceBreakdown& c);
nlohmann::json to_json(const CorroborationSummary& c);
nlohmann::json to_json(const ProcessMetrics& p);
nlohmann::json to_json(const std::vector<GroupComparison>& g);
nlohmann::json to_json(const ConfidenceCrosstab& c);
nlohmann::json to_json(const detections::IncidentalBreakdown& b);

}  // namespace landtriage::analytics
