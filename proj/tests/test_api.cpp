#include <atomic>
#include <thread>

#include "doctest.h"
#include "landtriage/api.hpp"
#include "landtriage/client.hpp"
#include "landtriage/dataset.hpp"
#include "landtriage/detections.hpp"
#include "landtriage/server.hpp"
#include "test_support.hpp"

using namespace landtriage;
using nlohmann::json;

namespace {

ServiceConfig memory_config() {
  ServiceConfig cfg;
  cfg.data_dir = "";
  return cfg;
}

ApiRequest req(std::string method, std::string path, std::string body = "",
               std::map<std::string, std::string> query = {}) {
  ApiRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  r.body = std::move(body);
  r.query = std::move(query);
  return r;
}

// One engine with the bundled fixture, shared by the read-only report checks.
struct Fixture {
  Engine engine{memory_config()};
  Api api{engine};
  Fixture() { import_dataset(support::fixture_dir(), local_transport(api)); }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::string detection_line(const std::string& id, double score, const std::string& run = "R1") {
  json j = detections::to_record(support::detection(id, run, score, support::box_at(43.0, -89.0)));
  j["score"] = score;
  return j.dump();
}

// Small registry with one facility and field, and an advocacy verifier at the field.
void seed_small(const Api& api) {
  json body{{"facilities", json::array({support::facility("F1", 43.0, -89.0)})},
            {"fields", support::feature_collection(json::array({support::square_field("F1-A", "F1", 43.0, -89.0, 0.01)}))},
            {"verifiers", json::array({support::verifier("V1", 43.0, -89.0)})}};
  REQUIRE(api.handle(req("POST", "/v1/registry", body.dump())).status == 200);
  REQUIRE(api.handle(req("POST", "/v1/runs", R"({"run_id":"R1","imagery_date":"2023-02-01","dispatched_on":"2023-02-02"})"))
              .status == 201);
}

}  // namespace

TEST_CASE("one bad score line is rejected with its line number") {
  Engine engine(memory_config());
  Api api(engine);
  seed_small(api);
  const auto r = api.handle(req("POST", "/v1/runs/R1/detections", detection_line("D1", 1.5) + "\n"));
  CHECK(r.status == 200);
  const auto j = r.json();
  CHECK(j["accepted"] == 0);
  CHECK(j["rejected"] == json::array({{{"line", 1}, {"reason", "score_out_of_range"}, {"detection_id", "D1"}}}));
  CHECK(engine.last_seq() == 2);

  const auto ok = api.handle(req("POST", "/v1/runs/R1/detections", detection_line("D2", 0.9) + "\n" + detection_line("D3", -0.1)));
  CHECK(ok.json()["accepted"] == 1);
  CHECK(ok.json()["rejected"][0]["line"] == 2);
  CHECK(api.handle(req("GET", "/v1/runs/R1/detections")).json().size() == 1);
}

TEST_CASE("status codes") {
  Engine engine(memory_config());
  Api api(engine);
  CHECK(api.handle(req("GET", "/v1/health")).status == 200);
  CHECK(api.handle(req("GET", "/v2/health")).status == 404);
  CHECK(api.handle(req("GET", "/v1/nothing")).status == 404);
  CHECK(api.handle(req("GET", "/v1/runs/NOPE")).status == 404);
  CHECK(api.handle(req("POST", "/v1/runs/NOPE/detections", detection_line("D1", 0.5, "NOPE"))).status == 404);
  CHECK(api.handle(req("GET", "/v1/route/R1")).status == 405);
  CHECK(api.handle(req("DELETE", "/v1/runs")).status == 405);
  CHECK(api.handle(req("POST", "/v1/runs", "{oops")).status == 400);
  CHECK(api.handle(req("POST", "/v1/runs", R"({"run_id":"R1","imagery_date":"2023-02-03","dispatched_on":"2023-02-02"})")).status == 400);
  seed_small(api);
  const auto dup = api.handle(req("POST", "/v1/runs", R"({"run_id":"R1","imagery_date":"2023-02-01","dispatched_on":"2023-02-02"})"));
  CHECK(dup.status == 409);
  CHECK(dup.json()["code"] == "duplicate_run");
  CHECK(dup.json().contains("message"));
  CHECK(api.handle(req("POST", "/v1/route/R1", "", {{"org", "nobody"}})).status == 400);
  CHECK(api.handle(req("POST", "/v1/route/R1")).status == 400);
  CHECK(api.handle(req("GET", "/v1/reports/nope")).status == 404);
  CHECK(api.handle(req("GET", "/v1/reports/lift")).status == 400);
  CHECK(api.handle(req("GET", "/v1/reports/totals", "", {{"format", "xml"}})).status == 400);
  CHECK(api.handle(req("GET", "/v1/reports/confirmation_by_bucket", "", {{"org", "elpc"}, {"screened_only", "true"}})).status == 400);
  // Registry is frozen once a run exists.
  CHECK(api.handle(req("POST", "/v1/registry", R"({"facilities":[],"fields":{"type":"FeatureCollection","features":[]},"verifiers":[]})"))
            .status == 409);
}

TEST_CASE("route, screen, packet and respond through the API") {
  Engine engine(memory_config());
  Api api(engine);
  seed_small(api);
  api.handle(req("POST", "/v1/runs/R1/detections", detection_line("D1", 0.9) + "\n" + detection_line("D2", 0.4)));
  CHECK(api.handle(req("POST", "/v1/route/R1", "", {{"org", "wdnr"}})).status == 200);
  CHECK(api.handle(req("POST", "/v1/route/R1", "", {{"org", "wdnr"}})).status == 409);
  CHECK(api.handle(req("POST", "/v1/route/R1", "", {{"org", "elpc"}})).status == 200);

  const auto queue = api.handle(req("GET", "/v1/screening", "", {{"status", "pending"}})).json();
  REQUIRE(queue.size() == 1);
  CHECK(queue[0]["detection_id"] == "D1");
  for (const char* k : {"image_uri", "summer_image_uri", "static_map_uri", "capture_date", "bbox", "score"}) CHECK(queue[0].contains(k));
  CHECK(queue[0]["capture_date"] == "2023-02-01");

  CHECK(api.handle(req("POST", "/v1/screening/D1", R"({"decision":"reject"})")).status == 400);
  CHECK(api.handle(req("POST", "/v1/screening/D1", R"({"decision":"accept","decided_on":"2023-02-02"})")).status == 200);
  CHECK(api.handle(req("POST", "/v1/screening/D1", R"({"decision":"accept","decided_on":"2023-02-02"})")).status == 409);

  const auto assignments = api.handle(req("GET", "/v1/assignments", "", {{"org", "elpc"}})).json();
  REQUIRE(assignments.size() == 2);
  const std::string aid = assignments[0]["assignment_id"];
  const auto packet = api.handle(req("GET", "/v1/packets/" + aid)).json();
  CHECK(packet["north_arrow"] == true);
  CHECK(packet["notes"].size() == 1);

  json resp{{"response_id", "r1"}, {"assignment_id", aid}, {"visited_on", "2023-02-03"}, {"location_visible", false},
            {"manure_present", true}};
  CHECK(api.handle(req("POST", "/v1/responses", resp.dump())).status == 400);
  resp["manure_present"] = nullptr;
  CHECK(api.handle(req("POST", "/v1/responses", resp.dump())).status == 201);
  CHECK(api.handle(req("POST", "/v1/responses", resp.dump())).status == 409);
  json amend = resp;
  amend["location_visible"] = true;
  amend["manure_present"] = true;
  CHECK(api.handle(req("POST", "/v1/responses/r1/amend", amend.dump())).status == 200);
  const auto got = api.handle(req("GET", "/v1/responses/r1")).json();
  CHECK(got["response"]["manure_present"] == true);
  CHECK(got["history"].size() == 1);
}

TEST_CASE("idempotency header replays the first reply") {
  Engine engine(memory_config());
  Api api(engine);
  seed_small(api);
  auto r = req("POST", "/v1/runs", R"({"run_id":"R2","imagery_date":"2023-02-04","dispatched_on":"2023-02-05"})");
  r.headers["idempotency-key"] = "abc";
  const auto first = api.handle(r);
  const auto second = api.handle(r);
  CHECK(first.status == 201);
  CHECK(second.status == 201);
  CHECK(first.body == second.body);
}

TEST_CASE("fixture compliance report") {
  const auto& f = fixture();
  const auto j = f.api.handle(req("GET", "/v1/reports/compliance")).json();
  CHECK(j["confirmed"] == 64);
  CHECK(j["counts"]["violation"] == 11);
  CHECK(j["counts"]["compliant_pre_window"] == 27);
  CHECK(j["counts"]["compliant_unregulated_entity"] == 23);
  CHECK(j["counts"]["compliant_other"] == 3);
  CHECK(j["share_noncompliant"] == doctest::Approx(0.172));
  CHECK(j["share_cracks"] == doctest::Approx(0.828));
  CHECK(j["share_afo_post_window"] == doctest::Approx(0.622));
  CHECK(j["corroboration"]["substantiation_rate"] == doctest::Approx(0.667));

  const auto text = f.api.handle(req("GET", "/v1/reports/compliance", "", {{"format", "text"}}));
  CHECK(text.content_type.find("text/plain") == 0);
  CHECK(text.body.find("violation") != std::string::npos);
  const auto csv = f.api.handle(req("GET", "/v1/reports/totals", "", {{"format", "csv"}}));
  CHECK(csv.content_type.find("text/csv") == 0);
  CHECK(csv.body.find("536") != std::string::npos);
  for (const auto& name : Api::report_names()) {
    std::map<std::string, std::string> q;
    if (name == "lift") q["total_images"] = "42000";
    for (const char* fmt : {"json", "text", "csv"}) {
      q["format"] = fmt;
      CHECK_MESSAGE(f.api.handle(req("GET", "/v1/reports/" + name, "", q)).status == 200, name, " ", fmt);
    }
  }
}

TEST_CASE("HTTP server and client agree with the in-process API") {
  const auto& f = fixture();
  HttpServer server(f.api);
  const int port = server.bind_any();
  REQUIRE(port > 0);
  std::thread t([&] { server.serve(); });
  const auto http = http_transport("http://127.0.0.1:" + std::to_string(port));
  const auto local = local_transport(f.api);

  for (const auto& name : {"totals", "compliance", "agreement", "process"}) {
    const auto a = http(req("GET", std::string("/v1/reports/") + name));
    const auto b = local(req("GET", std::string("/v1/reports/") + name));
    CHECK(a.status == 200);
    CHECK(a.body == b.body);
  }
  const auto q = http(req("GET", "/v1/reports/confirmation_by_bucket", "", {{"org", "wdnr"}, {"screened_only", "true"}}));
  CHECK(q.status == 200);
  CHECK(q.json()["screened_only"] == true);
  CHECK(http(req("GET", "/v1/runs/NOPE")).status == 404);
  CHECK(http(req("POST", "/v1/runs", "{oops")).status == 400);

  // Concurrent readers while the server is live.
  std::atomic<int> ok{0};
  std::vector<std::thread> readers;
  for (int i = 0; i < 4; ++i) {
    readers.emplace_back([&] {
      for (int k = 0; k < 5; ++k) ok += http(req("GET", "/v1/reports/totals")).status == 200;
    });
  }
  for (auto& r : readers) r.join();
  CHECK(ok == 20);

  server.stop();
  t.join();
  CHECK(http(req("GET", "/v1/health")).status == 503);
}

TEST_CASE("multipart registry upload over HTTP") {
  Engine engine(memory_config());
  Api api(engine);
  HttpServer server(api);
  const int port = server.bind_any();
  REQUIRE(port > 0);
  std::thread t([&] { server.serve(); });
  const auto http = http_transport("http://127.0.0.1:" + std::to_string(port));
  const auto dir = support::fixture_dir();
  ApiRequest up = req("POST", "/v1/registry");
  up.files = {{"facilities", read_file(dir / "facilities.json")},
              {"fields", read_file(dir / "fields.geojson")},
              {"verifiers", read_file(dir / "verifiers.json")}};
  CHECK(http(up).status == 200);
  const auto reg = http(req("GET", "/v1/registry")).json();
  CHECK(reg["cafo_facilities"] == 96);
  CHECK(reg["fields"] == 288);
  up.files.erase("verifiers");
  CHECK(http(up).status == 400);
  server.stop();
  t.join();
}
