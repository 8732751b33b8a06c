#include <chrono>
#include <random>

#include "doctest.h"
#include "landtriage/dataset.hpp"
#include "landtriage/error.hpp"
#include "landtriage/registry.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace landtriage;
using namespace landtriage::registry;
using nlohmann::json;

namespace {

struct RandomRegistry {
  json facilities = json::array();
  json fields = support::feature_collection();
  json verifiers = json::array();
};

RandomRegistry random_registry(std::mt19937_64& rng, int nfac, int nver) {
  std::uniform_real_distribution<double> lat(43.0, 44.0), lon(-90.0, -89.0), half(0.001, 0.02), u(0, 1);
  RandomRegistry r;
  for (int i = 0; i < nfac; ++i) {
    const std::string fid = support::id("F", i);
    const double a = lat(rng), b = lon(rng);
    r.facilities.push_back(support::facility(fid, a, b, u(rng) < 0.8 ? "cafo" : "unknown"));
    for (int k = 0; k < 2; ++k) {
      r.fields["features"].push_back(support::square_field(fid + "-" + std::to_string(k), fid, a + 0.02 * (u(rng) - 0.5),
                                                           b + 0.02 * (u(rng) - 0.5), half(rng)));
    }
  }
  for (int i = 0; i < nver; ++i) {
    r.verifiers.push_back(support::verifier(support::id("V", i), lat(rng), lon(rng), u(rng) < 0.8 ? "elpc" : "wdnr", u(rng) < 0.85));
  }
  return r;
}

}  // namespace

TEST_CASE("empty collections load") {
  const auto reg = Registry::load(json::array(), support::feature_collection(), json::array());
  CHECK(reg.facilities().empty());
  CHECK(reg.fields().empty());
  CHECK(reg.fields_intersecting({43, -90, 44, -89}).empty());
  CHECK(reg.verifiers_within({43.5, -89.5}, 1e6).empty());
  CHECK_FALSE(reg.nearest_facility({43.5, -89.5}));
}

TEST_CASE("duplicate facility id is named in the error") {
  json fac = json::array({support::facility("F-DUP", 43, -89), support::facility("F-DUP", 43.1, -89)});
  try {
    Registry::load(fac, support::feature_collection(), json::array());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("F-DUP") != std::string::npos);
  }
}

TEST_CASE("dangling permittee and bad geometry are rejected") {
  json fac = json::array({support::facility("F1", 43, -89)});
  json fields = support::feature_collection(json::array({support::square_field("X", "NOPE", 43, -89, 0.01)}));
  CHECK_THROWS_AS(Registry::load(fac, fields, json::array()), Error);
  json bad = support::square_field("X", "F1", 43, -89, 0.01);
  bad["geometry"]["coordinates"][0] = json::array({{-89, 43}, {-88, 44}});
  CHECK_THROWS_AS(Registry::load(fac, support::feature_collection(json::array({bad})), json::array()), Error);
  // CAFO below the permitting threshold.
  CHECK_THROWS_AS(Registry::load(json::array({support::facility("F2", 43, -89, "cafo", 400)}), support::feature_collection(),
                                 json::array()),
                  Error);
}

TEST_CASE("field lookup: empty region and single field") {
  json fac = json::array({support::facility("F1", 43, -89)});
  json fields = support::feature_collection(json::array({support::square_field("F1-A", "F1", 43.0, -89.0, 0.01)}));
  const auto reg = Registry::load(fac, fields, json::array());
  CHECK(reg.fields_intersecting({44.0, -88.0, 44.01, -87.99}).empty());
  const auto hit = reg.fields_intersecting({42.999, -89.001, 43.001, -88.999});
  REQUIRE(hit.size() == 1);
  CHECK(hit[0]->field_id == "F1-A");
}

TEST_CASE("randomized field lookup equals a linear scan") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> lat(42.95, 44.05), lon(-90.05, -88.95), size(0.0002, 0.03);
  for (int inst = 0; inst < 20; ++inst) {
    const auto r = random_registry(rng, 60, 0);
    const auto reg = Registry::load(r.facilities, r.fields, r.verifiers);
    for (int q = 0; q < 200; ++q) {
      const double a = lat(rng), b = lon(rng), h = size(rng), w = size(rng);
      const geo::GeoBBox box{a, b, a + h, b + w};
      std::vector<std::string> want;
      for (const auto& f : reg.fields()) {
        if (field_intersects(f, box)) want.push_back(f.field_id);
      }
      std::sort(want.begin(), want.end());
      std::vector<std::string> got;
      for (const auto* f : reg.fields_intersecting(box)) got.push_back(f->field_id);
      CHECK(got == want);
    }
  }
}

TEST_CASE("verifier radius queries: boundary cases") {
  json ver = json::array({support::verifier("V1", 43.0, -89.0)});
  const auto reg = Registry::load(json::array(), support::feature_collection(), ver);
  CHECK(reg.verifiers_within({43.1, -89.0}, 0.0).empty());
  const auto at = reg.verifiers_within({43.0, -89.0}, 0.0);
  REQUIRE(at.size() == 1);
  CHECK(at[0].distance_m == 0.0);
}

TEST_CASE("randomized verifier and facility queries equal brute force") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> lat(42.9, 44.1), lon(-90.1, -88.9), rad(0, 60'000);
  for (int inst = 0; inst < 20; ++inst) {
    const auto r = random_registry(rng, 40, 30);
    const auto reg = Registry::load(r.facilities, r.fields, r.verifiers);
    for (int q = 0; q < 200; ++q) {
      const geo::GeoPoint p{lat(rng), lon(rng)};
      const double radius = rad(rng);
      std::vector<std::pair<double, std::string>> want;
      for (const auto& v : reg.verifiers()) {
        const double d = oracle::great_circle_m(p, v.home);
        if (v.active && d <= radius) want.emplace_back(d, v.verifier_id);
      }
      std::sort(want.begin(), want.end());
      const auto got = reg.verifiers_within(p, radius);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].verifier->verifier_id == want[i].second);
        CHECK(std::abs(got[i].distance_m - want[i].first) <= 1e-3 + 1e-9 * want[i].first);
      }

      double best = 1e300;
      std::string best_id;
      bool in_aoi = false;
      for (const auto& f : reg.facilities()) {
        const double d = oracle::great_circle_m(p, f.location);
        if (d < best || (d == best && f.facility_id < best_id)) {
          best = d;
          best_id = f.facility_id;
        }
        in_aoi = in_aoi || geo::make_aoi(f.location, 6000.0).contains(p);
      }
      const auto near = reg.nearest_facility(p);
      REQUIRE(near);
      CHECK(near->facility->facility_id == best_id);
      CHECK(reg.in_any_aoi(p, 6000.0) == in_aoi);
    }
  }
}

TEST_CASE("trial registry: 96 CAFO locations load and index in under a second") {
  const auto dir = support::fixture_dir();
  const json fac = json::parse(read_file(dir / "facilities.json"));
  const json fields = json::parse(read_file(dir / "fields.geojson"));
  const json ver = json::parse(read_file(dir / "verifiers.json"));
  const auto t0 = std::chrono::steady_clock::now();
  const auto reg = Registry::load(fac, fields, ver);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 1.0);
  const auto cafos = std::count_if(reg.facilities().begin(), reg.facilities().end(),
                                   [](const Facility& f) { return f.kind == FacilityKind::cafo; });
  CHECK(cafos == 96);
  CHECK(reg.fields().size() == 288);
  // Every tenth CAFO has a two-part field.
  const auto multi = std::count_if(reg.fields().begin(), reg.fields().end(), [](const NmpField& f) { return f.parts.size() > 1; });
  CHECK(multi > 0);
}
