#include "doctest.h"
#include "landtriage/error.hpp"
#include "landtriage/fieldops.hpp"
#include "test_support.hpp"

using namespace landtriage;
using namespace landtriage::fieldops;

namespace {

routing::Assignment elpc_assignment() {
  routing::Assignment a;
  a.assignment_id = "elpc-D1-V1";
  a.detection_id = "D1";
  a.run_id = "R1";
  a.org = Org::elpc;
  a.verifier_id = "V1";
  a.dispatched_on = make_date(2023, 2, 1);
  a.rank = 1;
  return a;
}

routing::Assignment wdnr_assignment() {
  routing::Assignment a;
  a.assignment_id = "wdnr-D1";
  a.detection_id = "D1";
  a.run_id = "R1";
  a.org = Org::wdnr;
  a.dispatched_on = make_date(2023, 2, 1);
  return a;
}

FieldResponse response(bool visible, std::optional<bool> manure, Date visited = make_date(2023, 2, 1)) {
  FieldResponse r;
  r.response_id = "resp-1";
  r.assignment_id = "elpc-D1-V1";
  r.visited_on = visited;
  r.location_visible = visible;
  r.manure_present = manure;
  return r;
}

}  // namespace

TEST_CASE("response invariants") {
  const auto a = elpc_assignment();
  CHECK_THROWS_AS(validate_response(response(false, true), a), Error);
  CHECK_THROWS_AS(validate_response(response(true, std::nullopt), a), Error);
  CHECK_THROWS_AS(validate_response(response(true, true, make_date(2023, 1, 31)), a), Error);
  CHECK_THROWS_AS(validate_response(response(true, true), wdnr_assignment()), Error);
  auto ok = response(true, true);
  ok.reporter_confidence = ReporterConfidence::high;
  CHECK_NOTHROW(validate_response(ok, a));
  CHECK_NOTHROW(validate_response(response(false, std::nullopt), a));
}

TEST_CASE("determination invariants") {
  const auto a = wdnr_assignment();
  Determination d;
  d.assignment_id = a.assignment_id;
  d.decided_on = make_date(2023, 2, 3);
  d.manure_present = false;
  d.compliance = compliance::Compliance::violation;
  CHECK_THROWS_AS(validate_determination(d, a), Error);
  d.manure_present = true;
  CHECK_NOTHROW(validate_determination(d, a));
  d.compliance.reset();
  CHECK_THROWS_AS(validate_determination(d, a), Error);
  d.compliance = compliance::Compliance::violation;
  CHECK_THROWS_AS(validate_determination(d, elpc_assignment()), Error);
}

TEST_CASE("latency in whole days") {
  const auto a = elpc_assignment();
  CHECK(latency_days(a, response(true, false, make_date(2023, 2, 1))) == 0);
  CHECK(latency_days(a, response(true, false, make_date(2023, 2, 3))) == 2);
  // Month boundary.
  auto late = a;
  late.dispatched_on = make_date(2023, 2, 27);
  CHECK(latency_days(late, response(true, false, make_date(2023, 3, 2))) == 3);
}

TEST_CASE("field packet") {
  const auto a = elpc_assignment();
  auto d = support::detection("D1", "R1", 0.9, {43.1, -89.3, 43.1012, -89.2984});
  d.summer_image_uri = "img://D1/summer";
  const detections::ModelRun run{"R1", make_date(2023, 2, 1), make_date(2023, 2, 2)};
  const auto m = build_packet(a, d, run);
  CHECK(m.assignment_id == "elpc-D1-V1");
  CHECK(m.summer_image_uri == std::optional<std::string>("img://D1/summer"));
  CHECK(m.notes.empty());
  CHECK(m.north_arrow);
  CHECK(m.capture_date == run.imagery_date);
  CHECK(m.title.find("D1") != std::string::npos);
  CHECK(m.title.find("2023-02-01") != std::string::npos);
  CHECK(m.centroid_lat == doctest::Approx(43.1006));
  CHECK(m.centroid_lon == doctest::Approx(-89.2992));
  CHECK(m.centroid_lat == std::round(d.bbox.center().lat * 1e6) / 1e6);
  CHECK(m.centroid_lon == std::round(d.bbox.center().lon * 1e6) / 1e6);
  CHECK(m.static_map_uri.find("43.100600,-89.299200") != std::string::npos);
  CHECK(m.bbox == d.bbox);

  d.summer_image_uri.reset();
  const auto bare = build_packet(a, d, run);
  CHECK_FALSE(bare.summer_image_uri);
  CHECK(bare.notes == std::vector<std::string>{std::string(kSummerImageMissing)});
  CHECK(format_coord(-89.1234567) == "-89.123457");
}

TEST_CASE("response CSV import") {
  const std::string csv =
      "assignment_id,visited_on,location_visible,manure_present,reporter_confidence,notes\n"
      "elpc-D1-V1,2023-02-01,true,true,high,\"seen from road, north side\"\n"
      "elpc-D2-V1,2023-02-02,no,,,\"could not see \"\"anything\"\"\"\n"
      "elpc-D3-V1,2023-02-02,maybe,,,\n"
      "elpc-D4-V1,2023-13-02,yes,yes,low,\n"
      "\n"
      "elpc-D5-V1,2023-02-03,yes,no,,\n";
  const auto out = parse_response_csv(csv);
  REQUIRE(out.rows.size() == 3);
  CHECK(out.lines == std::vector<std::size_t>{2, 3, 7});
  CHECK(out.rows[0].notes == "seen from road, north side");
  CHECK(out.rows[0].reporter_confidence == ReporterConfidence::high);
  CHECK(out.rows[1].notes == "could not see \"anything\"");
  CHECK_FALSE(out.rows[1].location_visible);
  CHECK_FALSE(out.rows[1].manure_present);
  CHECK(out.rows[2].manure_present == std::optional<bool>(false));
  REQUIRE(out.errors.size() == 2);
  CHECK(out.errors[0].line == 4);
  CHECK(out.errors[0].field == "location_visible");
  CHECK(out.errors[1].line == 5);
  CHECK(out.errors[1].field == "visited_on");

  CHECK_THROWS_AS(parse_response_csv("assignment_id,visited_on\nx,2023-02-01\n"), Error);
}

TEST_CASE("csv splitter") {
  const auto rows = split_csv("a,b\r\n\"x,1\",\"\"\"q\"\"\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == std::vector<std::string>{"x,1", "\"q\""});
}
