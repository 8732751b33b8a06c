#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace landtriage {

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct EventRecord {
  std::uint64_t seq = 0;
  std::string recorded_at;
  std::string kind;
  nlohmann::json payload;
  std::optional<std::string> idempotency_key;
  // {status, body} returned to the first caller; replayed for a retried key.
  std::optional<nlohmann::json> response;

  nlohmann::json to_json() const;  // without digest
};

// Serialized line: the record plus a digest over the rest of the line, so a
// torn or edited record is recognised on open.
std::string encode_event_line(const EventRecord& r);
// nullopt when the line is not a well-formed record with a matching digest.
std::optional<EventRecord> decode_event_line(std::string_view line);

struct LogLoad {
  std::vector<EventRecord> records;
  std::vector<std::string> warnings;
  std::size_t truncated_bytes = 0;
};

// Append-only line-delimited JSON file. One writer at a time; the engine serialises access.
class EventLog {
 public:
  EventLog() = default;
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  EventLog(EventLog&& o) noexcept;
  EventLog& operator=(EventLog&& o) noexcept;

  // Reads every valid record. A corrupt tail (torn final write) is cut off
  // with a warning; corruption followed by valid records, or a seq gap, throws.
  static EventLog open(const std::filesystem::path& file, LogLoad& load, bool sync = true);

  void append(const EventRecord& r);
  std::uint64_t last_seq() const { return last_seq_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::uint64_t last_seq_ = 0;
  bool sync_ = true;
};

}  // namespace landtriage
