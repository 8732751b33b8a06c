#include "landtriage/analytics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "landtriage/error.hpp"

namespace landtriage::analytics {

using compliance::Compliance;
using nlohmann::json;

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // Clamp so the point estimate stays inside despite rounding at p = 0 or 1.
  return {std::clamp(std::min(center - half, p), 0.0, 1.0), std::clamp(std::max(center + half, p), 0.0, 1.0)};
}

std::vector<double> default_edges() {
  std::vector<double> e;
  for (int i = 0; i <= 10; ++i) e.push_back(i / 10.0);
  return e;
}

std::size_t bucket_of(double score, std::span<const double> edges) {
  if (edges.size() < 2 || score < edges.front() || score > edges.back()) return kNoBucket;
  auto it = std::upper_bound(edges.begin(), edges.end(), score);
  std::size_t idx = static_cast<std::size_t>(it - edges.begin());
  if (idx == edges.size()) return edges.size() - 2;  // score == last edge
  return idx - 1;
}

namespace {

std::vector<double> edges_or_default(std::span<const double> edges) {
  if (edges.empty()) return default_edges();
  std::vector<double> e(edges.begin(), edges.end());
  if (e.size() < 2 || !std::is_sorted(e.begin(), e.end()) ||
      std::adjacent_find(e.begin(), e.end()) != e.end()) {
    throw_validation("invalid_edges", "edges", "bucket edges must be strictly ascending with at least two values");
  }
  return e;
}

std::vector<BucketRow> empty_rows(const std::vector<double>& edges) {
  std::vector<BucketRow> rows(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    rows[i].lo = edges[i];
    rows[i].hi = edges[i + 1];
  }
  return rows;
}

void finish_rates(std::vector<BucketRow>& rows, bool followup) {
  for (auto& r : rows) {
    const std::size_t num = followup ? r.n_followed : r.n_confirmed;
    r.rate = r.n_denominator ? static_cast<double>(num) / static_cast<double>(r.n_denominator) : 0.0;
    const auto ci = wilson_interval(num, r.n_denominator);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
  }
}

double score_of(const TrialState& s, const std::string& detection_id) {
  auto it = s.detections.find(detection_id);
  return it == s.detections.end() ? 0.0 : it->second.score;
}

}  // namespace

BucketedRates confirmation_by_bucket(const TrialState& s, Org org, bool screened_only, std::span<const double> edges) {
  BucketedRates out;
  out.org = org;
  out.screened_only = screened_only;
  out.edges = edges_or_default(edges);
  out.rows = empty_rows(out.edges);

  auto row_for = [&](double score) -> BucketRow* {
    const std::size_t b = bucket_of(score, out.edges);
    return b == kNoBucket ? nullptr : &out.rows[b];
  };

  if (org == Org::elpc) {
    for (const auto& [id, a] : s.assignments) {
      if (a.org != Org::elpc) continue;
      BucketRow* row = row_for(score_of(s, a.detection_id));
      if (!row) continue;
      ++row->n_sent;
      ++row->n_denominator;
      if (const auto* r = s.response_for(id)) {
        ++row->n_followed;
        if (r->location_visible) ++row->n_visible;
        if (r->manure_present.value_or(false)) ++row->n_confirmed;
      }
    }
  } else {
    for (const auto& [det_id, item] : s.screening) {
      BucketRow* row = row_for(item.score);
      if (!row) continue;
      ++row->n_sent;
      const bool accepted = item.status == routing::ScreeningStatus::accepted;
      if (!screened_only || accepted) ++row->n_denominator;
      if (!accepted) continue;
      if (const auto* d = s.determination_for("wdnr-" + det_id)) {
        ++row->n_followed;
        if (d->manure_present) ++row->n_confirmed;
      }
    }
  }
  finish_rates(out.rows, false);
  for (const auto& r : out.rows) {
    out.total_sent += r.n_sent;
    out.total_followed += r.n_followed;
    out.total_visible += r.n_visible;
    out.total_confirmed += r.n_confirmed;
  }
  return out;
}

std::optional<double> rate_at_or_above(const BucketedRates& b, double cut) {
  std::size_t num = 0, den = 0;
  for (const auto& r : b.rows) {
    if (r.lo + 1e-12 < cut) continue;
    num += r.n_confirmed;
    den += r.n_denominator;
  }
  if (!den) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

TrialTotals trial_totals(const TrialState& s, Org org) {
  TrialTotals t;
  t.org = org;
  if (org == Org::elpc) {
    t.visible = 0;
    for (const auto& [id, a] : s.assignments) {
      if (a.org != Org::elpc) continue;
      ++t.sent;
      if (const auto* r = s.response_for(id)) {
        ++t.followed;
        if (r->location_visible) ++*t.visible;
        if (r->manure_present.value_or(false)) ++t.confirmed;
      }
    }
  } else {
    t.sent = s.screening.size();
    for (const auto& [id, a] : s.assignments) {
      if (a.org != Org::wdnr) continue;
      ++t.accepted;
      if (const auto* d = s.determination_for(id)) {
        ++t.followed;
        if (d->manure_present) ++t.confirmed;
      }
    }
  }
  return t;
}

LiftMetrics lift_metrics(double total_images, double sent, double confirmed, double top_bucket_rate,
                         std::optional<double> claimed_review_reduction) {
  if (!(total_images >= sent && sent >= confirmed && confirmed >= 0.0)) {
    throw_validation("invalid_counts", "total_images", "lift needs total_images >= sent >= confirmed >= 0");
  }
  if (total_images <= 0.0 || sent <= 0.0 || confirmed <= 0.0) {
    throw_validation("zero_denominator", "confirmed", "lift needs non-zero total_images, sent and confirmed");
  }
  if (!(top_bucket_rate >= 0.0 && top_bucket_rate <= 1.0)) {
    throw_validation("invalid_rate", "top_bucket_rate", "top_bucket_rate must be in [0,1]");
  }
  LiftMetrics m;
  m.review_reduction = 1.0 - sent / total_images;
  m.base_rate = confirmed / total_images;
  m.selected_rate = confirmed / sent;
  m.overall_lift = m.selected_rate / m.base_rate;
  m.top_lift = top_bucket_rate / m.base_rate;
  if (claimed_review_reduction && std::abs(*claimed_review_reduction - m.review_reduction) > 5e-4) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "claimed review reduction %.1f%% does not follow from the inputs; 1 - %.0f/%.0f = %.1f%%",
                  *claimed_review_reduction * 100.0, sent, total_images, m.review_reduction * 100.0);
    m.notes.emplace_back(buf);
  }
  return m;
}

AgreementTable agreement_table(const TrialState& s) {
  AgreementTable t;
  // detection_id -> (elpc assignment ids)
  std::map<std::string, std::vector<const routing::Assignment*>> elpc;
  for (const auto& [id, a] : s.assignments) {
    if (a.org == Org::elpc) elpc[a.detection_id].push_back(&a);
  }
  for (const auto& [det_id, item] : s.screening) {
    auto it = elpc.find(det_id);
    if (it == elpc.end()) continue;
    const fieldops::FieldResponse* resp = nullptr;
    for (const auto* a : it->second) {
      if ((resp = s.response_for(a->assignment_id))) break;
    }
    const fieldops::Determination* det = s.determination_for("wdnr-" + det_id);
    AgreementCell& cell = resp ? (det ? t.both : t.elpc_only) : (det ? t.wdnr_only : t.neither);
    ++cell.n;
    if (resp && resp->manure_present.value_or(false)) ++cell.elpc_confirmed;
    if (det && det->manure_present) ++cell.wdnr_confirmed;
  }
  auto rate = [](std::size_t k, std::size_t n) { return static_cast<double>(k) / static_cast<double>(n); };
  if (t.both.n) {
    t.both.elpc_rate = rate(t.both.elpc_confirmed, t.both.n);
    t.both.wdnr_rate = rate(t.both.wdnr_confirmed, t.both.n);
  }
  if (t.elpc_only.n) t.elpc_only.elpc_rate = rate(t.elpc_only.elpc_confirmed, t.elpc_only.n);
  if (t.wdnr_only.n) t.wdnr_only.wdnr_rate = rate(t.wdnr_only.wdnr_confirmed, t.wdnr_only.n);
  return t;
}

ComplianceBreakdown compliance_breakdown(const TrialState& s) {
  ComplianceBreakdown b;
  for (const auto& [name, _] : enum_table(Compliance{})) b.counts[name] = 0;
  for (const auto& [id, d] : s.determinations) {
    if (!d.manure_present) {
      ++b.no_manure;
      continue;
    }
    ++b.confirmed;
    if (d.compliance) ++b.counts[*d.compliance];
  }
  if (b.confirmed) {
    const double c = static_cast<double>(b.confirmed);
    const double v = static_cast<double>(b.counts[Compliance::violation]);
    b.share_noncompliant = v / c;
    b.share_cracks = (c - v) / c;
    const double post = c - static_cast<double>(b.counts[Compliance::compliant_pre_window]);
    if (post > 0.0) b.share_afo_post_window = static_cast<double>(b.counts[Compliance::compliant_unregulated_entity]) / post;
  }
  return b;
}

CorroborationSummary corroboration_summary(const TrialState& s, const compliance::SeasonalWindow& w, int boundary_days) {
  CorroborationSummary out;
  for (const auto& [c, _] : enum_table(compliance::Corroboration{})) out.counts[c] = 0;
  std::vector<compliance::Corroboration> results;
  for (const auto& [id, d] : s.determinations) {
    if (d.compliance != Compliance::compliant_pre_window) continue;
    auto a = s.assignments.find(d.assignment_id);
    if (a == s.assignments.end()) continue;
    auto obs = s.observations.find(a->second.detection_id);
    if (obs == s.observations.end()) continue;
    const auto& run = s.runs.at(a->second.run_id);
    const auto c = compliance::corroborate_pre_window(obs->second, w.for_date(run.imagery_date), boundary_days);
    ++out.counts[c];
    results.push_back(c);
    out.per_detection.emplace_back(a->second.detection_id, c);
  }
  out.total = results.size();
  if (!results.empty()) out.substantiation_rate = compliance::substantiation_rate(results);
  return out;
}

ProcessMetrics process_metrics(const TrialState& s, std::span<const double> edges_in) {
  ProcessMetrics p;
  const auto edges = edges_or_default(edges_in);
  p.followup_by_bucket = empty_rows(edges);
  std::size_t within_one = 0;
  for (const auto& [id, a] : s.assignments) {
    if (a.org != Org::elpc) continue;
    const std::size_t b = bucket_of(score_of(s, a.detection_id), edges);
    ++p.sent;
    if (b != kNoBucket) {
      ++p.followup_by_bucket[b].n_sent;
      ++p.followup_by_bucket[b].n_denominator;
    }
    const auto* r = s.response_for(id);
    if (!r) continue;
    ++p.visited;
    if (r->location_visible) ++p.visible;
    if (b != kNoBucket) {
      ++p.followup_by_bucket[b].n_followed;
      if (r->location_visible) ++p.followup_by_bucket[b].n_visible;
      if (r->manure_present.value_or(false)) ++p.followup_by_bucket[b].n_confirmed;
    }
    const int lat = fieldops::latency_days(a, *r);
    ++p.latency_histogram[lat];
    if (lat <= 1) ++within_one;
    p.max_latency_days = std::max(p.max_latency_days, lat);
  }
  finish_rates(p.followup_by_bucket, true);
  if (p.sent) p.followup_rate = static_cast<double>(p.visited) / static_cast<double>(p.sent);
  if (p.visited) {
    p.visibility_rate = static_cast<double>(p.visible) / static_cast<double>(p.visited);
    p.share_within_one_day = static_cast<double>(within_one) / static_cast<double>(p.visited);
  }
  return p;
}

std::optional<double> t_half_width(std::span<const double> values, double level) {
  const std::size_t n = values.size();
  if (n < 2) return std::nullopt;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  boost::math::students_t dist(static_cast<double>(n - 1));
  const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
  return t * sd / std::sqrt(static_cast<double>(n));
}

GroupStats summarize(std::string group, std::span<const double> values, double level) {
  GroupStats g;
  g.group = std::move(group);
  g.n = values.size();
  if (values.empty()) return g;
  g.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(g.n);
  if (g.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - g.mean) * (v - g.mean);
    g.sd = std::sqrt(ss / static_cast<double>(g.n - 1));
    g.ci_half_width = t_half_width(values, level);
  }
  return g;
}

std::vector<GroupComparison> group_comparison(const TrialState& s, Grouping grouping,
                                              std::vector<compliance::Compliance> excluded) {
  std::map<std::string, std::vector<double>> scores, areas;
  for (const auto& [id, d] : s.determinations) {
    if (!d.manure_present || !d.compliance) continue;
    if (std::find(excluded.begin(), excluded.end(), *d.compliance) != excluded.end()) continue;
    auto a = s.assignments.find(d.assignment_id);
    if (a == s.assignments.end()) continue;
    const auto& det = s.detections.at(a->second.detection_id);
    std::string group;
    if (grouping == Grouping::binary) {
      if (*d.compliance == Compliance::indeterminate) continue;
      group = *d.compliance == Compliance::violation ? "noncompliant" : "compliant";
    } else {
      group = std::string(to_string(*d.compliance));
    }
    scores[group].push_back(det.score);
    areas[group].push_back(geo::bbox_area_m2(det.bbox));
  }
  std::vector<GroupComparison> out;
  for (auto [metric, data] : {std::pair{"score", &scores}, std::pair{"bbox_area", &areas}}) {
    GroupComparison gc;
    gc.metric = metric;
    for (const auto& [group, values] : *data) gc.groups.push_back(summarize(group, values));
    out.push_back(std::move(gc));
  }
  return out;
}

ConfidenceCrosstab reporter_confidence_crosstab(const TrialState& s, std::span<const double> edges_in) {
  ConfidenceCrosstab c;
  c.edges = edges_or_default(edges_in);
  for (auto& row : c.counts) row.assign(c.edges.size() - 1, 0);
  for (const auto& [id, a] : s.assignments) {
    if (a.org != Org::elpc) continue;
    const auto* r = s.response_for(id);
    if (!r || !r->manure_present.value_or(false) || !r->reporter_confidence) continue;
    const std::size_t b = bucket_of(score_of(s, a.detection_id), c.edges);
    if (b == kNoBucket) continue;
    ++c.counts[static_cast<std::size_t>(*r->reporter_confidence)][b];
  }
  return c;
}

detections::IncidentalBreakdown incidental_breakdown(const TrialState& s, const detections::IncidentalParams& p) {
  std::vector<detections::IncidentalReport> reports;
  for (const auto& [id, r] : s.incidentals) reports.push_back(r);
  std::vector<detections::DatedDetection> dated;
  for (const auto& [id, d] : s.detections) dated.push_back({&d, s.runs.at(d.run_id).imagery_date});
  return detections::categorize_incidentals(reports, *s.registry, dated, p);
}

// ---- JSON ------------------------------------------------------------------

double round_to(double v, int decimals) {
  const double k = std::pow(10.0, decimals);
  return std::round(v * k) / k;
}

namespace {

json opt_rate(const std::optional<double>& v, int decimals = 3) { return v ? json(round_to(*v, decimals)) : json(nullptr); }

json row_json(const BucketRow& r) {
  return {{"lo", round_to(r.lo, 6)},         {"hi", round_to(r.hi, 6)},
          {"n_sent", r.n_sent},              {"n_followed", r.n_followed},
          {"n_visible", r.n_visible},        {"n_confirmed", r.n_confirmed},
          {"n_denominator", r.n_denominator}, {"rate", round_to(r.rate, 3)},
          {"ci_low", round_to(r.ci_low, 3)}, {"ci_high", round_to(r.ci_high, 3)}};
}

json cell_json(const AgreementCell& c) {
  return {{"n", c.n},
          {"elpc_confirmed", c.elpc_confirmed},
          {"wdnr_confirmed", c.wdnr_confirmed},
          {"elpc_rate", opt_rate(c.elpc_rate)},
          {"wdnr_rate", opt_rate(c.wdnr_rate)}};
}

json group_json(const GroupStats& g) {
  return {{"group", g.group},
          {"n", g.n},
          {"mean", round_to(g.mean, 6)},
          {"sd", opt_rate(g.sd, 6)},
          {"ci_half_width", opt_rate(g.ci_half_width, 6)}};
}

}  // namespace

json to_json(const BucketedRates& b) {
  json rows = json::array();
  for (const auto& r : b.rows) rows.push_back(row_json(r));
  return {{"org", to_string(b.org)},
          {"screened_only", b.screened_only},
          {"buckets", rows},
          {"totals",
           {{"sent", b.total_sent}, {"followed", b.total_followed}, {"visible", b.total_visible}, {"confirmed", b.total_confirmed}}}};
}

json to_json(const TrialTotals& t) {
  return {{"org", to_string(t.org)},
          {"sent", t.sent},
          {"accepted", t.org == Org::wdnr ? json(t.accepted) : json(nullptr)},
          {"followed", t.followed},
          {"visible", t.visible ? json(*t.visible) : json(nullptr)},
          {"confirmed", t.confirmed}};
}

json to_json(const LiftMetrics& l) {
  return {{"review_reduction", round_to(l.review_reduction, 3)},
          {"base_rate", round_to(l.base_rate, 5)},
          {"selected_rate", round_to(l.selected_rate, 3)},
          {"overall_lift", round_to(l.overall_lift, 1)},
          {"top_lift", round_to(l.top_lift, 1)},
          {"notes", l.notes}};
}

json to_json(const AgreementTable& t) {
  return {{"both_followed", cell_json(t.both)},
          {"elpc_only", cell_json(t.elpc_only)},
          {"wdnr_only", cell_json(t.wdnr_only)},
          {"neither", cell_json(t.neither)},
          {"total", t.total()}};
}

json to_json(const ComplianceBreakdown& c) {
  json counts = json::object();
  for (const auto& [k, v] : c.counts) counts[std::string(to_string(k))] = v;
  return {{"counts", counts},
          {"confirmed", c.confirmed},
          {"no_manure", c.no_manure},
          {"share_noncompliant", opt_rate(c.share_noncompliant)},
          {"share_cracks", opt_rate(c.share_cracks)},
          {"share_afo_post_window", opt_rate(c.share_afo_post_window)}};
}

json to_json(const CorroborationSummary& c) {
  json counts = json::object();
  for (const auto& [k, v] : c.counts) counts[std::string(to_string(k))] = v;
  return {{"counts", counts}, {"total", c.total}, {"substantiation_rate", opt_rate(c.substantiation_rate)}};
}

json to_json(const ProcessMetrics& p) {
  json rows = json::array();
  for (const auto& r : p.followup_by_bucket) rows.push_back(row_json(r));
  json hist = json::object();
  for (const auto& [d, n] : p.latency_histogram) hist[std::to_string(d)] = n;
  return {{"followup_by_bucket", rows},
          {"sent", p.sent},
          {"visited", p.visited},
          {"visible", p.visible},
          {"followup_rate", round_to(p.followup_rate, 3)},
          {"visibility_rate", round_to(p.visibility_rate, 3)},
          {"latency_histogram", hist},
          {"share_within_one_day", round_to(p.share_within_one_day, 3)},
          {"max_latency_days", p.max_latency_days}};
}

json to_json(const std::vector<GroupComparison>& g) {
  json out = json::object();
  for (const auto& gc : g) {
    json groups = json::array();
    for (const auto& s : gc.groups) groups.push_back(group_json(s));
    out[gc.metric] = groups;
  }
  return out;
}

json to_json(const ConfidenceCrosstab& c) {
  json edges = json::array();
  for (double e : c.edges) edges.push_back(round_to(e, 6));
  return {{"edges", edges}, {"high", c.counts[0]}, {"medium", c.counts[1]}, {"low", c.counts[2]}};
}

json to_json(const detections::IncidentalBreakdown& b) {
  json per = json::array();
  for (const auto& [id, cat] : b.per_report) per.push_back({{"report_id", id}, {"category", to_string(cat)}});
  return {{"non_geocodable", b.non_geocodable},
          {"detected_below_threshold", b.detected_below_threshold},
          {"outside_aoi", b.outside_aoi},
          {"missed_in_aoi", b.missed_in_aoi},
          {"detected", b.detected},
          {"total", b.total()},
          {"reports", per}};
}

}  // namespace landtriage::analytics
