#include <fstream>
#include <random>

#include "doctest.h"
#include "landtriage/dataset.hpp"
#include "landtriage/engine.hpp"
#include "landtriage/error.hpp"
#include "landtriage/event_log.hpp"
#include "landtriage/simulate.hpp"
#include "test_support.hpp"

using namespace landtriage;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

EventRecord record(std::uint64_t seq, std::mt19937_64& rng) {
  EventRecord r;
  r.seq = seq;
  r.recorded_at = "2023-02-01T00:00:00Z";
  r.kind = "kind" + std::to_string(rng() % 5);
  r.payload = {{"n", static_cast<std::int64_t>(rng() % 100000)}, {"s", std::string(rng() % 40, 'x') + "\"\n\\"},
               {"list", json::array({rng() % 7, 0.25, nullptr})}};
  if (rng() % 3 == 0) {
    r.idempotency_key = "key-" + std::to_string(seq);
    r.response = json{{"status", 201}, {"body", {{"ok", true}}}};
  }
  return r;
}

void write_lines(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
}

ErrorKind open_error(const fs::path& file) {
  try {
    LogLoad load;
    EventLog::open(file, load, false);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::validation;
}

ServiceConfig disk_config(const fs::path& dir, std::size_t snapshot_every = 0) {
  ServiceConfig cfg;
  cfg.data_dir = dir.string();
  cfg.fsync = false;
  cfg.snapshot_every = snapshot_every;
  return cfg;
}

fs::path small_dataset(const support::TempDir& root) {
  sim::SimParams p;
  p.seed = 19;
  p.facilities = 24;
  p.runs = 4;
  const fs::path dir = root.path / "dataset";
  write_dataset(sim::simulate(p), dir);
  return dir;
}

}  // namespace

TEST_CASE("event lines round-trip and reject edits") {
  std::mt19937_64 rng(1);
  for (std::uint64_t seq = 1; seq <= 200; ++seq) {
    const auto r = record(seq, rng);
    const auto line = encode_event_line(r);
    CHECK(line.find('\n') == line.size() - 1);
    const auto back = decode_event_line(line);
    REQUIRE(back);
    CHECK(back->to_json() == r.to_json());
    std::string edited = line;
    edited[rng() % edited.size()] ^= 0x01;
    CHECK_FALSE(decode_event_line(edited));
  }
  CHECK_FALSE(decode_event_line(""));
  CHECK_FALSE(decode_event_line("{}"));
}

TEST_CASE("empty and missing logs open cleanly") {
  support::TempDir dir("evlog-empty");
  LogLoad load;
  auto log = EventLog::open(dir.path / "events.jsonl", load, false);
  CHECK(load.records.empty());
  CHECK(load.warnings.empty());
  CHECK(log.last_seq() == 0);
  write_lines(dir.path / "blank.jsonl", "");
  LogLoad again;
  EventLog::open(dir.path / "blank.jsonl", again, false);
  CHECK(again.records.empty());
}

TEST_CASE("100 fuzzed logs: torn tails are cut, interior damage and gaps throw") {
  std::mt19937_64 rng(2);
  support::TempDir dir("evlog-fuzz");
  for (int inst = 0; inst < 100; ++inst) {
    const fs::path file = dir.path / ("log" + std::to_string(inst) + ".jsonl");
    const std::size_t n = 1 + rng() % 30;
    std::vector<EventRecord> recs;
    {
      LogLoad load;
      auto log = EventLog::open(file, load, false);
      for (std::size_t i = 1; i <= n; ++i) {
        recs.push_back(record(i, rng));
        log.append(recs.back());
      }
      CHECK_THROWS_AS(log.append(record(n + 5, rng)), Error);
    }
    const std::string full = read_file(file);

    LogLoad whole;
    EventLog::open(file, whole, false);
    REQUIRE(whole.records.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(whole.records[i].to_json() == recs[i].to_json());

    // Torn final write: any strict prefix of the last line.
    const std::size_t last_start = full.rfind('\n', full.size() - 2) == std::string::npos ? 0 : full.rfind('\n', full.size() - 2) + 1;
    const std::size_t cut = last_start + rng() % (full.size() - last_start);
    write_lines(file, full.substr(0, cut));
    LogLoad torn;
    auto reopened = EventLog::open(file, torn, false);
    CHECK(torn.records.size() == n - 1);
    CHECK(torn.truncated_bytes == cut - last_start);
    CHECK(torn.warnings.size() == (cut > last_start ? 1u : 0u));
    CHECK(fs::file_size(file) == last_start);
    // The log accepts the next record after the cut.
    reopened.append(recs.back());
    reopened = EventLog();
    LogLoad healed;
    EventLog::open(file, healed, false);
    CHECK(healed.records.size() == n);

    if (n >= 2) {
      // Damage in the middle of the file is not a torn write.
      std::string broken = full;
      broken[rng() % last_start] = '#';
      write_lines(file, broken);
      CHECK(open_error(file) == ErrorKind::internal);

      // Dropping an interior record leaves a seq gap.
      const std::size_t first_end = full.find('\n') + 1;
      const std::size_t second_end = full.find('\n', first_end) + 1;
      if (n >= 3) {
        write_lines(file, full.substr(0, first_end) + full.substr(second_end));
        CHECK(open_error(file) == ErrorKind::internal);
      }
    }
  }
}

TEST_CASE("engine replay is deterministic and survives restarts") {
  support::TempDir root("engine-replay");
  const auto data = small_dataset(root);
  const fs::path a = root.path / "a", b = root.path / "b";
  std::string live;
  std::uint64_t seq = 0;
  {
    Engine e(disk_config(a));
    import_dataset(data, e);
    live = e.digest();
    seq = e.last_seq();
  }
  CHECK(seq > 10);
  for (int i = 0; i < 2; ++i) {
    Engine again(disk_config(a));
    CHECK(again.digest() == live);
    CHECK(again.last_seq() == seq);
    CHECK(again.warnings().empty());
  }
  // A second import into a fresh directory gives the same state.
  {
    Engine e(disk_config(b));
    import_dataset(data, e);
    CHECK(e.digest() == live);
  }
  // In-memory engine agrees with the on-disk one.
  ServiceConfig mem;
  mem.data_dir = "";
  Engine m(mem);
  import_dataset(data, m);
  CHECK(m.digest() == live);
}

TEST_CASE("crash mid-batch: a torn last event is dropped and the rest replays") {
  support::TempDir root("engine-crash");
  const auto data = small_dataset(root);
  const fs::path dir = root.path / "d";
  { Engine e(disk_config(dir)); import_dataset(data, e); }
  const fs::path file = dir / "events.jsonl";
  const std::string full = read_file(file);
  const std::size_t last_start = full.rfind('\n', full.size() - 2) + 1;
  write_lines(file, full.substr(0, last_start + (full.size() - last_start) / 2));

  // Oracle: apply the surviving records to a fresh state directly.
  LogLoad load;
  {
    write_lines(root.path / "copy.jsonl", full.substr(0, last_start));
    EventLog::open(root.path / "copy.jsonl", load, false);
  }
  TrialState s;
  for (const auto& r : load.records) apply_event(s, r.kind, r.payload);

  Engine e(disk_config(dir));
  CHECK(e.warnings().size() == 1);
  CHECK(e.last_seq() == load.records.size());
  CHECK(e.digest() == state_digest(s));
}

TEST_CASE("snapshots give the same state as a full replay") {
  support::TempDir root("engine-snap");
  const auto data = small_dataset(root);
  std::string full;
  { Engine e(disk_config(root.path / "plain")); import_dataset(data, e); full = e.digest(); }
  const fs::path snap = root.path / "snap";
  { Engine e(disk_config(snap, 7)); import_dataset(data, e); CHECK(e.digest() == full); }
  std::size_t count = 0;
  for (const auto& f : fs::directory_iterator(snap / "snapshots")) count += f.path().extension() == ".json";
  CHECK(count == 2);
  {
    Engine e(disk_config(snap, 7));
    CHECK(e.digest() == full);
    CHECK(e.warnings().empty());
  }
  // Damaged snapshots are skipped with a warning.
  for (const auto& f : fs::directory_iterator(snap / "snapshots")) {
    auto text = read_file(f.path());
    text[text.size() / 2] = text[text.size() / 2] == '1' ? '2' : '1';
    write_lines(f.path(), text);
  }
  Engine e(disk_config(snap, 7));
  CHECK(e.digest() == full);
  CHECK(e.warnings().size() == 2);
}

TEST_CASE("idempotency keys replay the first reply") {
  support::TempDir root("engine-idem");
  const fs::path dir = root.path / "d";
  const json run{{"run_id", "R1"}, {"imagery_date", "2023-02-01"}, {"dispatched_on", "2023-02-02"}};
  Reply first;
  {
    Engine e(disk_config(dir));
    e.load_registry(json::array(), support::feature_collection(), json::array());
    first = e.register_run(run, std::string("k1"));
    CHECK(first.status == 201);
    const auto seq = e.last_seq();
    const auto again = e.register_run(run, std::string("k1"));
    CHECK(again.status == first.status);
    CHECK(again.body == first.body);
    CHECK(e.last_seq() == seq);
    CHECK_THROWS_AS(e.register_run(run, std::string("k2")), Error);
  }
  Engine e(disk_config(dir));
  const auto replay = e.replay_reply("k1");
  REQUIRE(replay);
  CHECK(replay->body == first.body);
  CHECK(e.register_run(run, std::string("k1")).body == first.body);
}

TEST_CASE("registry is locked once runs exist") {
  ServiceConfig mem;
  mem.data_dir = "";
  Engine e(mem);
  e.load_registry(json::array(), support::feature_collection(), json::array());
  e.load_registry(json::array(), support::feature_collection(), json::array());
  e.register_run({{"run_id", "R1"}, {"imagery_date", "2023-02-01"}, {"dispatched_on", "2023-02-02"}});
  try {
    e.load_registry(json::array(), support::feature_collection(), json::array());
    FAIL("expected conflict");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::conflict);
  }
}
