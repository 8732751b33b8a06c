#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "landtriage/config.hpp"
#include "landtriage/event_log.hpp"
#include "landtriage/state.hpp"

namespace landtriage {

// Status and body of a command, as served over HTTP.
struct Reply {
  int status = 200;
  nlohmann::json body;
};

// Applies one logged event to the state. Events are trusted: validation happened
// before they were written, so this only rebuilds.
void apply_event(TrialState& s, const std::string& kind, const nlohmann::json& payload);

// FNV-1a over the canonical state JSON.
std::string state_digest(const TrialState& s);

// Owns the state and its event log. Commands validate against the current
// state, append one event, then apply it; queries run under a shared lock.
class Engine {
 public:
  // An empty data_dir keeps everything in memory.
  explicit Engine(ServiceConfig cfg);
  ~Engine();

  const ServiceConfig& config() const { return cfg_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  template <typename F>
  auto read(F&& f) const {
    std::shared_lock lock(mu_);
    return f(state_);
  }

  // Stored reply for a retried Idempotency-Key.
  std::optional<Reply> replay_reply(const std::string& key) const;

  using Key = std::optional<std::string>;

  Reply load_registry(const nlohmann::json& facilities, const nlohmann::json& fields, const nlohmann::json& verifiers,
                      const Key& key = {});
  Reply register_run(const nlohmann::json& body, const Key& key = {});
  Reply ingest_detections(const std::string& run_id, std::string_view jsonl, const Key& key = {});
  Reply route(const std::string& run_id, Org org, const Key& key = {});
  Reply decide_screening(const std::string& detection_id, const nlohmann::json& body, const Key& key = {});
  Reply submit_response(const nlohmann::json& body, const Key& key = {});
  Reply import_responses(std::string_view csv, const Key& key = {});
  Reply amend_response(const std::string& response_id, const nlohmann::json& body, const Key& key = {});
  Reply submit_determination(const nlohmann::json& body, const Key& key = {});
  Reply import_determinations(std::string_view jsonl, const Key& key = {});
  Reply record_observations(const nlohmann::json& body, const Key& key = {});
  Reply report_incidental(const nlohmann::json& body, const Key& key = {});

  std::uint64_t last_seq() const;
  std::string digest() const;
  // Writes a snapshot of the current state now.
  void snapshot();

 private:
  // Caller holds the write lock.
  std::optional<Reply> cached(const Key& key) const;
  Reply commit(const std::string& kind, nlohmann::json payload, Reply reply, const Key& key);
  void write_snapshot_locked();
  void replay_from_disk();

  ServiceConfig cfg_;
  mutable std::shared_mutex mu_;
  TrialState state_;
  std::unique_ptr<EventLog> log_;
  std::uint64_t seq_ = 0;
  std::map<std::string, Reply> idempotent_;
  std::vector<std::string> warnings_;
};

}  // namespace landtriage
