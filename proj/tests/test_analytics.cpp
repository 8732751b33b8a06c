#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "landtriage/analytics.hpp"
#include "landtriage/dataset.hpp"
#include "landtriage/engine.hpp"
#include "landtriage/error.hpp"
#include "landtriage/simulate.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace landtriage;
using namespace landtriage::analytics;

namespace {

// Roots of (phat - p)^2 = z^2 p (1 - p) / n.
std::pair<double, double> wilson_roots(double k, double n, double z) {
  const double phat = k / n, z2n = z * z / n;
  const double a = 1.0 + z2n, b = -(2.0 * phat + z2n), c = phat * phat;
  const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
  return {(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)};
}

// Upper quantile of Student's t by Simpson integration of the density and bisection.
double t_quantile(double p, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  auto cdf = [&](double x) {
    const int n = 20000;
    const double h = x / n;
    double s = pdf(0) + pdf(x);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
    return 0.5 + s * h / 3;
  };
  double lo = 0, hi = 50;
  for (int i = 0; i < 60; ++i) {
    const double mid = (lo + hi) / 2;
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

TrialState import_sim(const sim::SimParams& p, Dataset* out = nullptr) {
  const auto d = sim::simulate(p);
  support::TempDir dir("analytics");
  write_dataset(d, dir.path);
  ServiceConfig cfg;
  cfg.data_dir = "";
  Engine engine(cfg);
  import_dataset(dir.path, engine);
  if (out) *out = d;
  return engine.read([](const TrialState& s) { return s; });
}

}  // namespace

TEST_CASE("wilson interval equals the quadratic roots") {
  CHECK(wilson_interval(0, 0).low == 0.0);
  CHECK(wilson_interval(0, 0).high == 1.0);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + rng() % 400, k = rng() % (n + 1);
    const auto got = wilson_interval(k, n);
    const auto [lo, hi] = wilson_roots(static_cast<double>(k), static_cast<double>(n), kZ95);
    CHECK(got.low == doctest::Approx(lo).epsilon(1e-9));
    CHECK(got.high == doctest::Approx(hi).epsilon(1e-9));
    CHECK(got.low <= static_cast<double>(k) / n + 1e-12);
    CHECK(got.high >= static_cast<double>(k) / n - 1e-12);
  }
  CHECK(wilson_interval(0, 10).low == doctest::Approx(0.0));
  CHECK(wilson_interval(10, 10).high == doctest::Approx(1.0));
}

TEST_CASE("t half-width against an integrated quantile") {
  CHECK(t_quantile(0.975, 10) == doctest::Approx(2.228).epsilon(2e-4));
  for (int n : {2, 3, 5, 11, 30, 120}) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = std::sin(i * 1.7) * 10 + i;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double want = t_quantile(0.975, n - 1) * std::sqrt(ss / (n - 1)) / std::sqrt(n);
    CHECK(*t_half_width(v) == doctest::Approx(want).epsilon(1e-6));
  }
  const std::vector<double> same(7, 3.5), one{1.0};
  CHECK(*t_half_width(same) == 0.0);
  CHECK_FALSE(t_half_width(one));
  const auto g = summarize("x", one);
  CHECK(g.n == 1);
  CHECK_FALSE(g.sd);
  CHECK(summarize("e", std::vector<double>{}).n == 0);
}

TEST_CASE("bucket boundaries") {
  const auto e = default_edges();
  REQUIRE(e.size() == 11);
  for (int i = 0; i < 10; ++i) {
    CHECK(bucket_of(i / 10.0, e) == static_cast<std::size_t>(i));
    CHECK(bucket_of(std::nextafter(i / 10.0, 2.0), e) == static_cast<std::size_t>(i));
  }
  CHECK(bucket_of(1.0, e) == 9);
  CHECK(bucket_of(-0.01, e) == kNoBucket);
  CHECK(bucket_of(1.01, e) == kNoBucket);
  const std::vector<double> coarse{0.0, 0.5, 1.0};
  CHECK(bucket_of(0.49999, coarse) == 0);
  CHECK(bucket_of(0.5, coarse) == 1);
}

TEST_CASE("lift identities") {
  const auto same = lift_metrics(100, 100, 10, 0.1);
  CHECK(same.review_reduction == 0.0);
  CHECK(same.overall_lift == doctest::Approx(1.0));
  CHECK(same.top_lift == doctest::Approx(1.0));
  const auto m = lift_metrics(1000, 50, 10, 0.4);
  CHECK(m.review_reduction == doctest::Approx(0.95));
  CHECK(m.overall_lift == doctest::Approx(20.0));
  CHECK(m.top_lift == doctest::Approx(40.0));
  CHECK(m.notes.empty());
  CHECK(lift_metrics(1000, 50, 10, 0.4, 0.95).notes.empty());
  CHECK(lift_metrics(1000, 50, 10, 0.4, 0.90).notes.size() == 1);
  CHECK_THROWS_AS(lift_metrics(10, 20, 1, 0.1), Error);
  CHECK_THROWS_AS(lift_metrics(10, 5, 0, 0.1), Error);
  CHECK_THROWS_AS(lift_metrics(10, 5, 1, 1.5), Error);
}

TEST_CASE("empty state reports") {
  const TrialState s;
  const auto b = confirmation_by_bucket(s, Org::elpc, false);
  CHECK(b.total_sent == 0);
  for (const auto& r : b.rows) {
    CHECK(r.ci_low == 0.0);
    CHECK(r.ci_high == 1.0);
  }
  CHECK_FALSE(rate_at_or_above(b, 0.8));
  CHECK(agreement_table(s).total() == 0);
  const auto c = compliance_breakdown(s);
  CHECK(c.confirmed == 0);
  CHECK_FALSE(c.share_noncompliant);
  CHECK(process_metrics(s).visited == 0);
  CHECK(group_comparison(s).size() == 2);
  const std::vector<double> bad{0.5, 0.2};
  CHECK_THROWS_AS(confirmation_by_bucket(s, Org::elpc, false, bad), Error);
}

TEST_CASE("confirmation by bucket matches counts recomputed from raw records") {
  sim::SimParams p;
  p.seed = 7;
  p.facilities = 30;
  p.runs = 4;
  Dataset d;
  const auto s = import_sim(p, &d);
  std::map<std::string, double> score;
  for (const auto& det : d.detections) score[det.detection_id] = det.score;
  std::map<std::string, const fieldops::FieldResponse*> resp;
  for (const auto& r : d.responses) resp[r.assignment_id] = &r;

  std::vector<std::size_t> sent(10), confirmed(10);
  for (const auto& [id, a] : s.assignments) {
    if (a.org != Org::elpc) continue;
    const auto b = static_cast<std::size_t>(std::min(9.0, std::floor(score.at(a.detection_id) * 10 + 1e-9)));
    ++sent[b];
    auto it = resp.find(id);
    confirmed[b] += it != resp.end() && it->second->manure_present.value_or(false);
  }
  const auto got = confirmation_by_bucket(s, Org::elpc, false);
  REQUIRE(got.rows.size() == 10);
  std::size_t total = 0;
  for (std::size_t b = 0; b < 10; ++b) {
    CHECK(got.rows[b].n_sent == sent[b]);
    CHECK(got.rows[b].n_confirmed == confirmed[b]);
    total += sent[b];
    if (sent[b]) CHECK(got.rows[b].rate == doctest::Approx(double(confirmed[b]) / sent[b]));
  }
  CHECK(total > 0);

  // Regulator side: confirmed over accepted, from the screening and determination files.
  std::map<std::string, bool> accepted;
  for (const auto& r : d.screening) accepted[r.detection_id] = r.decision == routing::Decision::accept;
  std::size_t acc = 0, conf = 0;
  for (const auto& det : d.determinations) conf += det.manure_present;
  for (const auto& [id, ok] : accepted) acc += ok;
  const auto w = confirmation_by_bucket(s, Org::wdnr, true);
  CHECK(w.total_confirmed == conf);
  std::size_t den = 0;
  for (const auto& r : w.rows) den += r.n_denominator;
  CHECK(den == acc);
  CHECK(w.total_sent == d.screening.size());
}

TEST_CASE("agreement cells partition the overlap") {
  sim::SimParams p;
  p.seed = 11;
  p.facilities = 40;
  p.runs = 6;
  const auto s = import_sim(p);
  const auto t = agreement_table(s);
  std::set<std::string> elpc;
  for (const auto& [id, a] : s.assignments) {
    if (a.org == Org::elpc) elpc.insert(a.detection_id);
  }
  std::size_t overlap = 0;
  for (const auto& [id, item] : s.screening) overlap += elpc.count(id);
  CHECK(t.total() == overlap);
  for (const auto* c : {&t.both, &t.elpc_only, &t.wdnr_only, &t.neither}) {
    CHECK(c->elpc_confirmed <= c->n);
    CHECK(c->wdnr_confirmed <= c->n);
  }
  CHECK_FALSE(t.neither.elpc_rate);
  CHECK_FALSE(t.neither.wdnr_rate);
  CHECK_FALSE(t.wdnr_only.elpc_rate);
  CHECK_FALSE(t.elpc_only.wdnr_rate);
}

TEST_CASE("process metrics against the response file") {
  sim::SimParams p;
  p.seed = 3;
  Dataset d;
  const auto s = import_sim(p, &d);
  const auto m = process_metrics(s);
  std::size_t visible = 0;
  for (const auto& r : d.responses) visible += r.location_visible;
  CHECK(m.visited == d.responses.size());
  CHECK(m.visible == visible);
  std::size_t hist = 0;
  for (const auto& [days, n] : m.latency_histogram) {
    CHECK(days >= 0);
    CHECK(days <= m.max_latency_days);
    hist += n;
  }
  CHECK(hist == m.visited);
  CHECK(m.followup_rate == doctest::Approx(double(m.visited) / m.sent));
}
