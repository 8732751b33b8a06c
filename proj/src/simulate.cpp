#include "landtriage/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "landtriage/error.hpp"
#include "landtriage/registry.hpp"

namespace landtriage::sim {

using nlohmann::json;
using compliance::Compliance;

Rng::Rng(std::uint64_t seed) : gen_(seed) {}

std::uint64_t Rng::next() { return gen_(); }

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::index(std::size_t n) { return n ? static_cast<std::size_t>(next() % n) : 0; }

bool Rng::chance(double p) { return uniform() < p; }

TprCurve TprCurve::parse(std::string_view spec) {
  TprCurve c;
  c.spec_ = std::string(spec);
  c.knots_.clear();
  auto bad = [&](const std::string& why) {
    throw_validation("invalid_curve", "tpr_curve", "tpr curve '" + std::string(spec) + "': " + why);
  };
  auto number = [&](std::string_view s) -> double {
    try {
      std::size_t used = 0;
      double v = std::stod(std::string(s), &used);
      if (used != s.size()) bad("bad number '" + std::string(s) + "'");
      return v;
    } catch (const std::invalid_argument&) {
      bad("bad number '" + std::string(s) + "'");
    } catch (const std::out_of_range&) {
      bad("number out of range '" + std::string(s) + "'");
    }
    return 0.0;
  };
  if (spec.rfind("const:", 0) == 0) {
    const double p = number(spec.substr(6));
    if (!(p >= 0.0 && p <= 1.0)) bad("probability outside [0,1]");
    c.knots_ = {{0.0, p}, {1.0, p}};
    return c;
  }
  if (spec.rfind("pl:", 0) != 0) bad("expected 'pl:' or 'const:' form");
  std::string_view rest = spec.substr(3);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) bad("knot '" + std::string(item) + "' lacks '='");
    const double s = number(item.substr(0, eq));
    const double p = number(item.substr(eq + 1));
    if (!(s >= 0.0 && s <= 1.0) || !(p >= 0.0 && p <= 1.0)) bad("knots must lie in [0,1]x[0,1]");
    if (!c.knots_.empty() && s <= c.knots_.back().first) bad("scores must be strictly ascending");
    c.knots_.emplace_back(s, p);
  }
  if (c.knots_.empty()) bad("no knots");
  return c;
}

double TprCurve::operator()(double score) const {
  if (score <= knots_.front().first) return knots_.front().second;
  if (score >= knots_.back().first) return knots_.back().second;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), score,
                             [](double s, const std::pair<double, double>& k) { return s < k.first; });
  const auto& [s1, p1] = *it;
  const auto& [s0, p0] = *(it - 1);
  return p0 + (p1 - p0) * (score - s0) / (s1 - s0);
}

bool TprCurve::monotone() const {
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i].second < knots_[i - 1].second) return false;
  }
  return true;
}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double r6(double v) { return std::round(v * 1e6) / 1e6; }
double r3(double v) { return std::round(v * 1e3) / 1e3; }

geo::GeoPoint offset(const geo::GeoPoint& p, double dn_m, double de_m) {
  return {p.lat + dn_m / geo::kMetersPerDegree, p.lon + de_m / (geo::kMetersPerDegree * std::cos(p.lat * kDegToRad))};
}

geo::GeoBBox square(const geo::GeoPoint& c, double side_m) {
  const auto sw = offset(c, -side_m / 2, -side_m / 2);
  const auto ne = offset(c, side_m / 2, side_m / 2);
  return {r6(sw.lat), r6(sw.lon), r6(ne.lat), r6(ne.lon)};
}

// GeoJSON ring from local (de, dn) metre offsets around `origin`.
json ring(const geo::GeoPoint& origin, const std::vector<std::pair<double, double>>& local) {
  json out = json::array();
  for (const auto& [de, dn] : local) {
    const auto p = offset(origin, dn, de);
    out.push_back({r6(p.lon), r6(p.lat)});
  }
  out.push_back(out.front());
  return out;
}

json facility_json(const std::string& id, const geo::GeoPoint& p, std::string_view kind, std::optional<double> au,
                   std::string_view phase, std::optional<std::string> permit) {
  json j{{"facility_id", id}, {"lat", r6(p.lat)}, {"lon", r6(p.lon)}, {"kind", kind}};
  if (au) j["animal_units"] = *au;
  j["waste_phase"] = phase;
  if (permit) j["permit_id"] = *permit;
  return j;
}

json field_feature(const std::string& id, const std::string& permittee, json coordinates, bool multi) {
  return {{"type", "Feature"},
          {"properties", {{"field_id", id}, {"permittee_facility_id", permittee}}},
          {"geometry", {{"type", multi ? "MultiPolygon" : "Polygon"}, {"coordinates", std::move(coordinates)}}}};
}

json verifier_json(const std::string& id, const geo::GeoPoint& home, std::string_view org, bool active) {
  return {{"verifier_id", id}, {"lat", r6(home.lat)}, {"lon", r6(home.lon)}, {"org", org}, {"active", active}};
}

std::string padded(const char* prefix, int n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, n);
  return buf;
}

// Spreads category counts evenly over a sequence: at each position take the
// category furthest behind its pro-rata share.
template <typename T>
std::vector<T> interleave(const std::vector<std::pair<T, int>>& counts) {
  int total = 0;
  for (const auto& [c, n] : counts) total += n;
  std::vector<int> used(counts.size(), 0);
  std::vector<T> out;
  for (int i = 0; i < total; ++i) {
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (used[k] >= counts[k].second) continue;
      const double deficit = static_cast<double>(counts[k].second) * (i + 1) / total - used[k];
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        best = k;
      }
    }
    ++used[best];
    out.push_back(counts[best].first);
  }
  return out;
}

// Field footprint in local metres around the field center: 1.4 km x 1.0 km with the
// north-east corner chamfered.
const std::vector<std::pair<double, double>> kFieldShape = {{-700, -500}, {700, -500}, {700, 300}, {500, 500}, {-700, 500}};
const std::vector<std::pair<double, double>> kHoleShape = {{-100, -100}, {-100, 100}, {100, 100}, {100, -100}};
constexpr std::array<double, 3> kFieldEast = {-1800.0, 0.0, 1800.0};
constexpr double kFieldNorth = 1200.0;

struct Site {
  std::string facility_id;
  geo::GeoPoint location;
  int on_field_count = 0;
  int off_field_count = 0;
};

// On-field spot: north half of one of the three fields, clear of the hole and the chamfer.
geo::GeoPoint on_field_spot(Site& s) {
  const int c = s.on_field_count++;
  const double de = kFieldEast[static_cast<std::size_t>(c % 3)] - 400.0 + 80.0 * ((c / 3) % 9);
  return offset(s.location, kFieldNorth + 250.0, de);
}

// Off-field spot: south half of the AOI, well away from every field.
geo::GeoPoint off_field_spot(Site& s) {
  const int c = s.off_field_count++;
  return offset(s.location, -1500.0, -2400.0 + 300.0 * (c % 17));
}

void add_cafo_fields(Dataset& d, const Site& s, bool multipolygon_c) {
  for (std::size_t k = 0; k < 3; ++k) {
    const auto center = offset(s.location, kFieldNorth, kFieldEast[k]);
    const std::string id = s.facility_id + "-" + static_cast<char>('A' + k);
    json poly = json::array({ring(center, kFieldShape)});
    if (k == 1) poly.push_back(ring(center, kHoleShape));
    if (k == 2 && multipolygon_c) {
      // A detached parcel south of the main block.
      const auto parcel = offset(s.location, 400.0, kFieldEast[k]);
      json second = json::array({ring(parcel, {{-150, -150}, {150, -150}, {150, 150}, {-150, 150}})});
      d.fields["features"].push_back(field_feature(id, s.facility_id, json::array({poly, second}), true));
    } else {
      d.fields["features"].push_back(field_feature(id, s.facility_id, poly, false));
    }
  }
}

detections::Detection make_detection(const std::string& id, const std::string& run_id, double score,
                                     const geo::GeoBBox& box, bool summer) {
  detections::Detection det;
  det.detection_id = id;
  det.run_id = run_id;
  det.score = score;
  det.bbox = box;
  det.image_uri = "img://" + run_id + "/" + id + "/winter.png";
  if (summer) det.summer_image_uri = "img://" + run_id + "/" + id + "/summer.png";
  return det;
}

std::vector<detections::ModelRun> twice_weekly_runs(int n) {
  std::vector<detections::ModelRun> runs;
  Date day = make_date(2023, 2, 1);
  for (int i = 0; i < n; ++i) {
    runs.push_back({padded("R", i + 1, 2), day, add_days(day, 1)});
    day = add_days(day, i % 2 == 0 ? 3 : 4);
  }
  return runs;
}

constexpr std::array<routing::RejectReason, 5> kReasons = {routing::RejectReason::vegetation, routing::RejectReason::building,
                                                           routing::RejectReason::roadway, routing::RejectReason::shadow,
                                                           routing::RejectReason::other};

}  // namespace

// ---------------------------------------------------------------------------
// Random simulator

Dataset simulate(const SimParams& p) {
  if (p.facilities < 1 || p.facilities > 5000) {
    throw_validation("invalid_argument", "facilities", "facilities must be in [1, 5000]");
  }
  if (p.runs < 1 || p.runs > 200) throw_validation("invalid_argument", "runs", "runs must be in [1, 200]");
  Rng rng(p.seed);
  Dataset d;
  d.manifest = {{"name", "simulated"},
                {"seed", p.seed},
                {"facilities", p.facilities},
                {"runs", p.runs},
                {"tpr_curve", p.curve.spec()},
                {"generator", "landtriage simulate"}};

  // Facilities on a jittered grid over the state's agricultural band.
  const double lat0 = 42.6, lat1 = 45.8, lon0 = -92.0, lon1 = -88.0;
  const int cols = static_cast<int>(std::ceil(std::sqrt(p.facilities * 1.25)));
  const int rows = (p.facilities + cols - 1) / cols;
  const double dlat = (lat1 - lat0) / rows, dlon = (lon1 - lon0) / cols;
  std::vector<Site> sites;
  for (int i = 0; i < p.facilities; ++i) {
    const int r = i / cols, c = i % cols;
    geo::GeoPoint loc{lat0 + dlat * (r + 0.5 + rng.uniform(-0.3, 0.3)), lon0 + dlon * (c + 0.5 + rng.uniform(-0.3, 0.3))};
    loc = {r6(loc.lat), r6(loc.lon)};
    const std::string id = padded("F", i + 1, 4);
    const double au = std::round(rng.uniform(1000.0, 6000.0));
    d.facilities.push_back(facility_json(id, loc, "cafo", au, rng.chance(0.7) ? "liquid" : "both", "WI-" + id));
    sites.push_back({id, loc});
    add_cafo_fields(d, sites.back(), false);
  }
  for (int i = 0; i < std::max(1, p.facilities / 5); ++i) {
    const geo::GeoPoint loc{r6(rng.uniform(lat0, lat1)), r6(rng.uniform(lon0, lon1))};
    d.facilities.push_back(facility_json(padded("A", i + 1, 4), loc, "afo", std::round(rng.uniform(100.0, 999.0)), "unknown", {}));
  }
  const int nver = p.verifiers > 0 ? p.verifiers : std::max(2, p.facilities / 5);
  for (int i = 0; i < nver; ++i) {
    const geo::GeoPoint home{rng.uniform(lat0, lat1), rng.uniform(lon0, lon1)};
    d.verifiers.push_back(verifier_json(padded("V", i + 1, 3), home, "elpc", true));
  }
  const auto reg = registry::Registry::load(d.facilities, d.fields, d.verifiers);

  d.runs = twice_weekly_runs(p.runs);
  const compliance::SeasonalWindow window;
  int reason_cycle = 0;
  for (const auto& run : d.runs) {
    std::vector<detections::Detection> dets;
    int n = 0;
    for (auto& s : sites) {
      const std::size_t count = rng.index(3);
      for (std::size_t k = 0; k < count; ++k) {
        const double score = r3(rng.uniform(0.05, 1.0));
        const bool truth = rng.chance(p.curve(score));
        const auto spot = rng.chance(0.6) ? on_field_spot(s) : off_field_spot(s);
        const std::string id = run.run_id + "-" + padded("", ++n, 5);
        dets.push_back(make_detection(id, run.run_id, score, square(spot, rng.uniform(50.0, 200.0)), rng.chance(0.95)));
        d.truth[id] = truth;
      }
    }
    d.detections.insert(d.detections.end(), dets.begin(), dets.end());

    for (const auto& item : routing::route_wdnr(run, dets, reg)) {
      const bool truth = d.truth.at(item.detection_id);
      ScreeningRecord rec;
      rec.detection_id = item.detection_id;
      rec.decided_on = add_days(run.dispatched_on, static_cast<int>(rng.index(3)));
      if (rng.chance(truth ? p.accept_true : p.accept_false)) {
        rec.decision = routing::Decision::accept;
        fieldops::Determination det;
        det.assignment_id = "wdnr-" + item.detection_id;
        det.determination_id = "det-" + item.detection_id;
        det.decided_on = add_days(rec.decided_on, 2 + static_cast<int>(rng.index(9)));
        det.manure_present = truth;
        if (truth) {
          compliance::SpreadEvent e;
          e.event_date = add_days(run.imagery_date, -static_cast<int>(rng.index(10)));
          const bool cafo = rng.chance(0.7);
          e.entity_class = cafo ? compliance::EntityClass::cafo : compliance::EntityClass::afo;
          e.animal_units = cafo ? std::round(rng.uniform(1000.0, 6000.0)) : std::round(rng.uniform(100.0, 999.0));
          e.waste_phase = rng.chance(0.7) ? compliance::Phase::liquid : compliance::Phase::solid;
          e.surface = std::array{compliance::Surface::snow_covered, compliance::Surface::frozen,
                                 compliance::Surface::bare_unfrozen}[rng.index(3)];
          e.emergency_approved = rng.chance(0.02);
          e.claimed_pre_window = e.event_date < window.for_date(e.event_date).start;
          det.compliance = compliance::classify(e, window.for_date(e.event_date));
          det.event = e;
        }
        d.determinations.push_back(std::move(det));
      } else {
        rec.decision = routing::Decision::reject;
        rec.reason = kReasons[static_cast<std::size_t>(reason_cycle++) % kReasons.size()];
      }
      d.screening.push_back(std::move(rec));
    }

    for (const auto& a : routing::route_elpc(run, dets, reg)) {
      if (!rng.chance(p.followup_rate)) continue;
      const bool truth = d.truth.at(a.detection_id);
      fieldops::FieldResponse r;
      r.assignment_id = a.assignment_id;
      r.response_id = "resp-" + a.assignment_id;
      const double u = rng.uniform();
      const int latency = u < 0.40 ? 0 : u < 0.90 ? 1 : u < 0.96 ? 2 : u < 0.99 ? 3 : 4;
      r.visited_on = add_days(a.dispatched_on, latency);
      r.location_visible = rng.chance(p.visibility_rate);
      if (r.location_visible) {
        r.manure_present = rng.chance(0.05) ? !truth : truth;
        const double score = std::find_if(dets.begin(), dets.end(), [&](const auto& x) {
                               return x.detection_id == a.detection_id;
                             })->score;
        if (*r.manure_present && rng.chance(0.3 + 0.5 * score)) {
          r.reporter_confidence = fieldops::ReporterConfidence::high;
        } else {
          r.reporter_confidence = rng.chance(0.5) ? fieldops::ReporterConfidence::medium : fieldops::ReporterConfidence::low;
        }
      }
      d.responses.push_back(std::move(r));
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Trial fixture

namespace {

enum class Role { none, both, elpc_only, wdnr_only, neither };

struct Plan {
  int bucket = 0;  // 2..9 -> [b/10, b/10 + 0.1)
  double score = 0.0;
  Role role = Role::none;
  bool elpc = false;
  bool followed = false, visible = false, confirmed = false;
  bool wdnr = false;
  bool accepted = false, wdnr_confirmed = false;
  std::optional<Compliance> ruling;
  bool on_field = false;
  bool decoy = false;
  bool south = false;
  int run = 0;
  int verifier = -1;
  int site = 0;
  double side_m = 100.0;
  std::string id;
  geo::GeoBBox box;
};

struct Bucket {
  int sent, followed, visible, confirmed;
};

// Advocacy verifier outcomes per score bucket 0.2 .. 0.9.
constexpr std::array<Bucket, 8> kElpc = {{{30, 21, 15, 2},
                                          {40, 29, 21, 3},
                                          {52, 37, 27, 5},
                                          {110, 79, 59, 8},
                                          {110, 78, 58, 17},
                                          {94, 67, 50, 23},
                                          {60, 43, 32, 20},
                                          {40, 29, 22, 15}}};

struct WdnrBucket {
  int sent, accepted, confirmed;
};
// Regulator desk screen per score bucket 0.5 .. 0.9.
constexpr std::array<WdnrBucket, 5> kWdnr = {{{180, 9, 5}, {140, 17, 9}, {113, 29, 15}, {60, 38, 20}, {40, 30, 15}}};

// Detections sent to both organisations, per bucket 0.5 .. 0.9:
// advocacy-only follow-ups (n, confirmed), regulator-only follow-ups (n, confirmed), neither.
constexpr std::array<std::array<int, 5>, 5> kOverlap = {{
    // elpc_only_n, elpc_only_conf, wdnr_only_n, wdnr_only_conf, neither
    {6, 1, 2, 1, 5},
    {6, 2, 3, 1, 4},
    {6, 2, 4, 2, 3},
    {4, 2, 3, 1, 1},
    {2, 1, 2, 1, 1},
}};

constexpr int kRuns = 17;
constexpr int kElpcVerifiers = 15;
constexpr int kSlots = 120;
constexpr int kFullSlots = 56;  // slots holding five detections; the rest hold four
constexpr int kSouthRows = 6, kSouthCols = 11;

// Violation footprints, hectares: large on average with a long tail.
constexpr std::array<double, 11> kViolationHa = {0.8, 1.2, 1.6, 2.0, 2.6, 3.2, 4.0, 5.2, 6.8, 8.8, 13.4};

double bucket_score(int bucket, int i, int n) {
  return r3(bucket / 10.0 + 0.005 + 0.09 * (i + 0.5) / n);
}

void assign_scores(std::vector<Plan>& specs) {
  std::map<int, std::vector<Plan*>> by_bucket;
  for (auto& s : specs) by_bucket[s.bucket].push_back(&s);
  for (auto& [b, list] : by_bucket) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      list[i]->score = bucket_score(b, static_cast<int>(i), static_cast<int>(list.size()));
    }
  }
}

}  // namespace

Dataset trial2023() {
  Rng rng(2023);
  Dataset d;
  d.manifest = {{"name", "trial2023"},
                {"description", "Synthetic raw records for the winter 2023 field trial (17 runs, 96 CAFO locations)."},
                {"total_images", 40995},
                {"claimed_review_reduction", 0.998},
                {"generator", "landtriage simulate --preset trial2023"}};

  // --- registry -------------------------------------------------------------
  std::vector<geo::GeoPoint> homes;
  for (double lat : {44.0, 44.8, 45.6}) {
    for (double lon : {-92.0, -91.2, -90.4, -89.6, -88.8}) homes.push_back({lat, lon});
  }
  std::vector<Site> north;  // two per advocacy verifier
  std::vector<Site> south;
  int fac = 0;
  for (std::size_t v = 0; v < homes.size(); ++v) {
    for (auto [dlat, dlon] : {std::pair{-0.05, -0.06}, std::pair{0.06, 0.05}}) {
      const geo::GeoPoint loc{r6(homes[v].lat + dlat), r6(homes[v].lon + dlon)};
      const std::string id = padded("F", ++fac, 3);
      d.facilities.push_back(facility_json(id, loc, "cafo", 1200.0 + 150.0 * (fac % 20), fac % 4 ? "liquid" : "both", "WI-" + id));
      north.push_back({id, loc});
    }
  }
  for (int r = 0; r < kSouthRows; ++r) {
    for (int c = 0; c < kSouthCols; ++c) {
      const geo::GeoPoint loc{r6(42.6 + 0.14 * r), r6(-91.0 + 0.22 * c)};
      const std::string id = padded("F", ++fac, 3);
      d.facilities.push_back(facility_json(id, loc, "cafo", 1000.0 + 125.0 * (fac % 33), fac % 3 ? "liquid" : "solid", "WI-" + id));
      south.push_back({id, loc});
    }
  }
  int idx = 0;
  for (auto& s : north) add_cafo_fields(d, s, idx++ % 10 == 0);
  for (auto& s : south) add_cafo_fields(d, s, idx++ % 10 == 0);
  // Satellite manure storage of some permitted operations, smaller unpermitted
  // operations, and unclassified sites on the peninsula.
  for (int i = 0; i < 6; ++i) {
    const auto& parent = south[static_cast<std::size_t>(i * 11)];
    const auto loc = offset(parent.location, -800.0, 2000.0);
    d.facilities.push_back(facility_json(parent.facility_id + "-S", {r6(loc.lat), r6(loc.lon)}, "cafo_satellite", {}, "liquid",
                                         "WI-" + parent.facility_id));
  }
  for (int i = 0; i < 10; ++i) {
    const geo::GeoPoint loc{r6(42.67 + 0.14 * (i % 5)), r6(-90.89 + 0.44 * (i / 5) + 0.22 * (i % 3))};
    d.facilities.push_back(facility_json(padded("A", i + 1, 3), loc, "afo", 300.0 + 65.0 * i, "unknown", {}));
  }
  for (int i = 0; i < 4; ++i) {
    d.facilities.push_back(
        facility_json(padded("D", i + 1, 3), {r6(44.9 + 0.07 * i), -87.3}, "unknown", {}, "unknown", {}));
  }
  for (std::size_t v = 0; v < homes.size(); ++v) {
    d.verifiers.push_back(verifier_json(padded("V", static_cast<int>(v) + 1, 2), homes[v], "elpc", true));
  }
  // Retired volunteer near V01 and two regulator specialists; routing ignores all three.
  d.verifiers.push_back(verifier_json("V16", {44.01, -91.99}, "elpc", false));
  d.verifiers.push_back(verifier_json("W01", {44.02, -92.02}, "wdnr", true));
  d.verifiers.push_back(verifier_json("W02", {43.07, -89.40}, "wdnr", true));

  d.runs = twice_weekly_runs(kRuns);

  // --- detections sent to both organisations -----------------------------------
  std::vector<Plan> overlap;
  auto push_overlap = [&](int bucket, Role role, bool followed, bool visible, bool confirmed, bool accepted,
                          bool wdnr_confirmed) {
    Plan s;
    s.bucket = bucket;
    s.role = role;
    s.elpc = s.wdnr = s.on_field = true;
    s.followed = followed;
    s.visible = visible;
    s.confirmed = confirmed;
    s.accepted = accepted;
    s.wdnr_confirmed = wdnr_confirmed;
    overlap.push_back(s);
  };
  // Both followed up: five detections, advocacy 3 confirmed, regulator 4.
  push_overlap(7, Role::both, true, true, false, true, false);
  push_overlap(8, Role::both, true, true, true, true, true);
  push_overlap(8, Role::both, true, true, false, true, true);
  push_overlap(9, Role::both, true, true, true, true, true);
  push_overlap(9, Role::both, true, true, true, true, true);
  for (int b = 5; b <= 9; ++b) {
    const auto& row = kOverlap[static_cast<std::size_t>(b - 5)];
    for (int i = 0; i < row[0]; ++i) {
      const bool conf = i < row[1];
      push_overlap(b, Role::elpc_only, true, conf || i % 3 != 2, conf, false, false);
    }
    for (int i = 0; i < row[2]; ++i) push_overlap(b, Role::wdnr_only, false, false, false, true, i < row[3]);
    for (int i = 0; i < row[4]; ++i) push_overlap(b, Role::neither, false, false, false, false, false);
  }

  // --- remaining advocacy detections --------------------------------------------
  std::vector<Plan> elpc = overlap;
  for (int b = 2; b <= 9; ++b) {
    const auto& target = kElpc[static_cast<std::size_t>(b - 2)];
    Bucket used{0, 0, 0, 0};
    for (const auto& s : overlap) {
      if (s.bucket != b) continue;
      ++used.sent;
      used.followed += s.followed;
      used.visible += s.visible;
      used.confirmed += s.confirmed;
    }
    const int n = target.sent - used.sent;
    const int f = target.followed - used.followed;
    const int v = target.visible - used.visible;
    const int c = target.confirmed - used.confirmed;
    if (n < f || f < v || v < c || c < 0) {
      throw Error(ErrorKind::internal, "fixture_inconsistent", "bucket", "advocacy bucket totals do not fit the overlap");
    }
    for (int i = 0; i < n; ++i) {
      Plan s;
      s.bucket = b;
      s.elpc = true;
      s.confirmed = i < c;
      s.visible = i < v;
      s.followed = i < f;
      // Below the desk threshold a detection may sit on a field; above it, it must not.
      s.on_field = b < 5 && i % 2 == 0;
      elpc.push_back(s);
    }
  }
  assign_scores(elpc);
  rng.shuffle(elpc);

  // Fill (run, verifier) slots; slot k pairs run k mod 17 with verifier k mod 15,
  // which never repeats a pair for k < 255.
  std::vector<Plan> placed;
  std::size_t next = 0;
  std::vector<int> site_cycle(north.size(), 0);
  for (int k = 0; k < kSlots; ++k) {
    const bool full = (k + 1) * kFullSlots / kSlots != k * kFullSlots / kSlots;
    const int size = full ? 5 : 4;
    const int run = k % kRuns, ver = k % kElpcVerifiers;
    for (int i = 0; i < size; ++i) {
      Plan s = elpc.at(next++);
      s.run = run;
      s.verifier = ver;
      s.site = 2 * ver + (site_cycle[static_cast<std::size_t>(ver)]++ % 2);
      placed.push_back(s);
    }
    if (full) {
      // Sixth, low-scoring detection that the top-5 cut removes.
      Plan decoy;
      decoy.decoy = true;
      decoy.score = 0.15;
      decoy.run = run;
      decoy.verifier = ver;
      decoy.site = 2 * ver;
      placed.push_back(decoy);
    }
  }
  if (next != elpc.size()) {
    throw Error(ErrorKind::internal, "fixture_inconsistent", "slots", "advocacy detections do not fill the slots");
  }

  // --- regulator-only detections in the southern band ------------------------------
  std::vector<Plan> southern;
  for (int b = 5; b <= 9; ++b) {
    const auto& target = kWdnr[static_cast<std::size_t>(b - 5)];
    int sent = 0, acc = 0, conf = 0;
    for (const auto& s : overlap) {
      if (s.bucket != b) continue;
      ++sent;
      acc += s.accepted;
      conf += s.wdnr_confirmed;
    }
    const int n = target.sent - sent, a = target.accepted - acc, c = target.confirmed - conf;
    // Spread accepted and confirmed items through the bucket rather than bunching them.
    const auto order = interleave<int>({{2, c}, {1, a - c}, {0, n - a}});
    for (int o : order) {
      Plan s;
      s.bucket = b;
      s.wdnr = s.on_field = s.south = true;
      s.accepted = o >= 1;
      s.wdnr_confirmed = o == 2;
      southern.push_back(s);
    }
  }
  assign_scores(southern);

  // Rulings on confirmed events; pre-window claims only where later imagery exists.
  {
    std::vector<Plan*> north_conf, south_conf;
    for (auto& s : placed) {
      if (s.wdnr_confirmed) north_conf.push_back(&s);
    }
    for (auto& s : southern) {
      if (s.wdnr_confirmed) south_conf.push_back(&s);
    }
    auto order = [](std::vector<Plan*>& v) {
      std::stable_sort(v.begin(), v.end(), [](const Plan* a, const Plan* b) { return a->bucket < b->bucket; });
    };
    order(north_conf);
    const auto n_rulings = interleave<Compliance>({{Compliance::violation, 3},
                                                   {Compliance::compliant_unregulated_entity, 6},
                                                   {Compliance::compliant_other, 1}});
    const auto s_rulings = interleave<Compliance>({{Compliance::violation, 8},
                                                   {Compliance::compliant_pre_window, 27},
                                                   {Compliance::compliant_unregulated_entity, 17},
                                                   {Compliance::compliant_other, 2}});
    if (north_conf.size() != n_rulings.size() || south_conf.size() != s_rulings.size()) {
      throw Error(ErrorKind::internal, "fixture_inconsistent", "rulings", "confirmed counts do not match the rulings");
    }
    for (std::size_t i = 0; i < north_conf.size(); ++i) north_conf[i]->ruling = n_rulings[i];
    for (std::size_t i = 0; i < south_conf.size(); ++i) south_conf[i]->ruling = s_rulings[i];
  }

  // Below-threshold detections on fields and above-threshold ones off fields; neither reaches anyone.
  for (int i = 0; i < 20; ++i) {
    Plan s;
    s.south = s.on_field = true;
    s.score = r3(0.30 + 0.0095 * i);
    southern.push_back(s);
    Plan t;
    t.south = true;
    t.score = r3(0.50 + 0.0225 * i);
    southern.push_back(t);
  }

  // Runs and sites for the southern band.
  int south_i = 0;
  for (auto& s : southern) {
    s.site = (south_i * 7) % static_cast<int>(south.size());
    s.run = s.ruling == Compliance::compliant_pre_window ? 2 + south_i % (kRuns - 2) : south_i % kRuns;
    ++south_i;
  }

  // Footprints: violations large with a long tail, other rulings moderate, the rest small.
  {
    int v = 0, c = 0, o = 0;
    auto size = [&](Plan& s) {
      if (s.ruling == Compliance::violation) {
        s.side_m = std::sqrt(kViolationHa.at(static_cast<std::size_t>(v++)) * 1e4);
      } else if (s.ruling) {
        s.side_m = 120.0 + 15.0 * (c++ % 5);
      } else {
        s.side_m = 60.0 + 10.0 * (o++ % 11);
      }
    };
    for (auto& s : placed) size(s);
    for (auto& s : southern) size(s);
  }

  // --- ids, geometry, records -----------------------------------------------------
  std::vector<std::vector<Plan*>> per_run(kRuns);
  for (auto& s : placed) per_run[static_cast<std::size_t>(s.run)].push_back(&s);
  for (auto& s : southern) per_run[static_cast<std::size_t>(s.run)].push_back(&s);
  int summer_cycle = 0;
  for (int r = 0; r < kRuns; ++r) {
    const auto& run = d.runs[static_cast<std::size_t>(r)];
    int n = 0;
    for (Plan* s : per_run[static_cast<std::size_t>(r)]) {
      s->id = run.run_id + "-" + padded("", ++n, 4);
      Site& site = s->south ? south[static_cast<std::size_t>(s->site)] : north[static_cast<std::size_t>(s->site)];
      geo::GeoPoint center;
      if (s->decoy) {
        center = offset(site.location, -2500.0, -2500.0);
      } else {
        center = s->on_field ? on_field_spot(site) : off_field_spot(site);
      }
      s->box = square(center, s->decoy ? 40.0 : s->side_m);
      d.detections.push_back(make_detection(s->id, run.run_id, s->score, s->box, ++summer_cycle % 25 != 0));
    }
  }

  auto run_of = [&](const Plan& s) -> const detections::ModelRun& { return d.runs[static_cast<std::size_t>(s.run)]; };

  // --- desk screening and regulator determinations -------------------------------------
  std::vector<const Plan*> screened;
  for (const auto& s : placed) {
    if (s.wdnr) screened.push_back(&s);
  }
  for (const auto& s : southern) {
    if (s.wdnr) screened.push_back(&s);
  }
  std::stable_sort(screened.begin(), screened.end(),
                   [](const Plan* a, const Plan* b) { return std::tie(a->run, a->id) < std::tie(b->run, b->id); });
  int reason_i = 0, det_i = 0;
  int ruling_i[5] = {0, 0, 0, 0, 0};
  std::vector<std::pair<const Plan*, Date>> pre_window_claims;
  for (std::size_t i = 0; i < screened.size(); ++i) {
    const Plan& s = *screened[i];
    const auto& run = run_of(s);
    ScreeningRecord rec;
    rec.detection_id = s.id;
    rec.decided_on = add_days(run.dispatched_on, static_cast<int>(i % 3));
    if (!s.accepted) {
      rec.decision = routing::Decision::reject;
      rec.reason = kReasons[static_cast<std::size_t>(reason_i++) % kReasons.size()];
      d.screening.push_back(rec);
      continue;
    }
    rec.decision = routing::Decision::accept;
    rec.note = "likely application";
    d.screening.push_back(rec);

    fieldops::Determination det;
    det.assignment_id = "wdnr-" + s.id;
    det.determination_id = "det-" + s.id;
    det.decided_on = add_days(rec.decided_on, 2 + det_i % 9);
    det.manure_present = s.wdnr_confirmed;
    det.method_notes = det_i % 2 ? "site visit" : "aerial follow-up and landowner contact";
    ++det_i;
    if (s.ruling) {
      compliance::SpreadEvent e;
      e.event_date = run.imagery_date;
      e.entity_class = compliance::EntityClass::cafo;
      const int k = ruling_i[static_cast<int>(*s.ruling)]++;
      e.animal_units = 1200.0 + 100.0 * (k % 30);
      e.waste_phase = compliance::Phase::liquid;
      e.surface = k % 2 ? compliance::Surface::frozen : compliance::Surface::snow_covered;
      switch (*s.ruling) {
        case Compliance::violation:
          if (k % 3 == 2) e.waste_phase = compliance::Phase::solid;
          break;
        case Compliance::compliant_pre_window:
          e.event_date = make_date(2023, 1, 24 + static_cast<unsigned>(k % 8));
          e.claimed_pre_window = true;
          pre_window_claims.emplace_back(&s, run.imagery_date);
          break;
        case Compliance::compliant_unregulated_entity:
          e.entity_class = compliance::EntityClass::afo;
          e.animal_units = 300.0 + 30.0 * (k % 23);
          break;
        case Compliance::compliant_other:
          if (k < 2) {
            e.waste_phase = compliance::Phase::solid;
            e.surface = compliance::Surface::bare_unfrozen;
          } else {
            e.emergency_approved = true;
          }
          break;
        case Compliance::indeterminate:
          break;
      }
      det.compliance = *s.ruling;
      det.event = e;
    }
    d.determinations.push_back(std::move(det));
  }

  // --- imagery time series behind the pre-window claims ----------------------------------
  {
    const auto outcomes = interleave<compliance::Corroboration>({{compliance::Corroboration::pre_window, 11},
                                                                 {compliance::Corroboration::boundary, 7},
                                                                 {compliance::Corroboration::in_window, 5},
                                                                 {compliance::Corroboration::unsure, 4}});
    if (outcomes.size() != pre_window_claims.size()) {
      throw Error(ErrorKind::internal, "fixture_inconsistent", "observations", "pre-window claims do not number 27");
    }
    int unsure_i = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& [spec, imagery] = pre_window_claims[i];
      auto jan = [](unsigned day) { return make_date(2023, 1, day); };
      auto feb = [](unsigned day) { return make_date(2023, 2, day); };
      std::vector<compliance::Observation> obs;
      switch (outcomes[i]) {
        case compliance::Corroboration::pre_window:
          obs = {{jan(18), false, true}, {jan(26 + static_cast<unsigned>(i % 5)), true, true}, {imagery, true, true}};
          break;
        case compliance::Corroboration::boundary:
          obs = {{jan(22), false, true}, {jan(i % 2 ? 30 : 31), false, true}, {feb(2), true, true}, {imagery, true, true}};
          break;
        case compliance::Corroboration::in_window:
          obs = {{jan(28), false, true}, {feb(3), false, true}, {feb(6), true, true}, {imagery, true, true}};
          break;
        case compliance::Corroboration::unsure:
          if (unsure_i++ < 2) {
            // Cloud-obscured scenes only.
            obs = {{jan(27), true, false}, {feb(5), true, false}};
          } else {
            obs = {{jan(25), false, true}, {feb(4), true, true}, {imagery, true, true}};
          }
          break;
      }
      d.observations.push_back({spec->id, std::move(obs)});
    }
  }

  // --- advocacy field responses ---------------------------------------------------------------
  {
    std::vector<const Plan*> followed;
    for (const auto& s : placed) {
      if (s.followed) followed.push_back(&s);
    }
    std::vector<int> latency;
    for (auto [days, count] : {std::pair{0, 150}, std::pair{1, 200}, std::pair{2, 20}, std::pair{3, 9}, std::pair{4, 4}}) {
      latency.insert(latency.end(), static_cast<std::size_t>(count), days);
    }
    if (latency.size() != followed.size()) {
      throw Error(ErrorKind::internal, "fixture_inconsistent", "latency", "latency counts do not match follow-ups");
    }
    rng.shuffle(latency);
    // Share of confirmed reports marked high confidence, per bucket 0.2 .. 0.9.
    constexpr std::array<double, 8> kHigh = {0.0, 0.33, 0.4, 0.5, 0.5, 0.55, 0.6, 0.7};
    std::map<int, int> conf_seen, other_seen;
    std::map<int, int> conf_total;
    for (const auto* s : followed) conf_total[s->bucket] += s->confirmed;
    for (std::size_t i = 0; i < followed.size(); ++i) {
      const Plan& s = *followed[i];
      fieldops::FieldResponse r;
      r.assignment_id = "elpc-" + s.id + "-" + padded("V", s.verifier + 1, 2);
      r.response_id = "resp-" + r.assignment_id;
      r.visited_on = add_days(run_of(s).dispatched_on, latency[i]);
      r.location_visible = s.visible;
      if (s.visible) {
        r.manure_present = s.confirmed;
        if (s.confirmed) {
          const int k = conf_seen[s.bucket]++;
          const int highs = static_cast<int>(std::lround(kHigh[static_cast<std::size_t>(s.bucket - 2)] * conf_total[s.bucket]));
          r.reporter_confidence = k < highs ? fieldops::ReporterConfidence::high
                                  : k % 2   ? fieldops::ReporterConfidence::low
                                            : fieldops::ReporterConfidence::medium;
        } else {
          const int k = other_seen[s.bucket]++;
          r.reporter_confidence = std::array{fieldops::ReporterConfidence::medium, fieldops::ReporterConfidence::high,
                                             fieldops::ReporterConfidence::low}[static_cast<std::size_t>(k % 3)];
        }
        r.notes = s.confirmed ? "manure visible from road" : "no manure seen";
      } else {
        r.notes = "could not see the field from public roads";
      }
      d.responses.push_back(std::move(r));
    }
    std::stable_sort(d.responses.begin(), d.responses.end(),
                     [](const auto& a, const auto& b) { return a.assignment_id < b.assignment_id; });
  }

  // --- incidental reports ----------------------------------------------------------------------
  {
    std::vector<detections::IncidentalReport> no_loc, below, outside, missed;
    for (int i = 0; i < 5; ++i) {
      no_loc.push_back({"", padded("V", i * 3 + 1, 2), make_date(2023, 2, static_cast<unsigned>(6 + 4 * i)), std::nullopt,
                        "spreading seen along a county road; no location recorded"});
    }
    int decoys = 0;
    for (const auto& s : placed) {
      if (!s.decoy || decoys == 2) continue;
      ++decoys;
      below.push_back({"", padded("V", s.verifier + 1, 2), add_days(run_of(s).imagery_date, 1), s.box.center(),
                       "fresh spreading next to the farmstead"});
    }
    for (int i = 0; i < 14; ++i) {
      const geo::GeoPoint p{r6(homes[static_cast<std::size_t>(i)].lat + 0.4), r6(homes[static_cast<std::size_t>(i)].lon + 0.4)};
      outside.push_back({"", padded("V", i + 1, 2), make_date(2023, 2, static_cast<unsigned>(10 + i)), p,
                         "spreading on a field far from any permitted operation"});
    }
    for (int i = 0; i < 13; ++i) {
      const auto p = offset(south[static_cast<std::size_t>(5 * i)].location, -2600.0, 2600.0);
      missed.push_back({"", "W02", make_date(2023, 2, static_cast<unsigned>(12 + i)), geo::GeoPoint{r6(p.lat), r6(p.lon)},
                        "spreading inside the monitored area with no detection"});
    }
    const auto order = interleave<int>({{0, 5}, {1, 2}, {2, 14}, {3, 13}});
    std::array<std::size_t, 4> used{};
    std::array<std::vector<detections::IncidentalReport>*, 4> pools = {&no_loc, &below, &outside, &missed};
    int n = 0;
    for (int which : order) {
      auto r = (*pools[static_cast<std::size_t>(which)])[used[static_cast<std::size_t>(which)]++];
      r.report_id = padded("INC-", ++n, 2);
      d.incidentals.push_back(std::move(r));
    }
  }
  return d;
}

}  // namespace landtriage::sim
