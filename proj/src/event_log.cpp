#include "landtriage/event_log.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>

#include "landtriage/error.hpp"

namespace landtriage {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json EventRecord::to_json() const {
  json j{{"seq", seq}, {"recorded_at", recorded_at}, {"kind", kind}, {"payload", payload}};
  if (idempotency_key) j["idempotency_key"] = *idempotency_key;
  if (response) j["response"] = *response;
  return j;
}

std::string encode_event_line(const EventRecord& r) {
  json j = r.to_json();
  j["digest"] = hex64(fnv1a64(r.to_json().dump()));
  return j.dump() + "\n";
}

std::optional<EventRecord> decode_event_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto dig = j.find("digest");
  if (dig == j.end() || !dig->is_string()) return std::nullopt;
  const std::string expected = dig->get<std::string>();
  j.erase("digest");
  if (hex64(fnv1a64(j.dump())) != expected) return std::nullopt;
  if (!j.contains("seq") || !j["seq"].is_number_unsigned() || !j.contains("kind") || !j["kind"].is_string() ||
      !j.contains("payload")) {
    return std::nullopt;
  }
  EventRecord r;
  r.seq = j["seq"].get<std::uint64_t>();
  r.recorded_at = j.value("recorded_at", "");
  r.kind = j["kind"].get<std::string>();
  r.payload = j["payload"];
  if (j.contains("idempotency_key") && j["idempotency_key"].is_string()) r.idempotency_key = j["idempotency_key"];
  if (j.contains("response")) r.response = j["response"];
  return r;
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

EventLog::EventLog(EventLog&& o) noexcept : path_(std::move(o.path_)), file_(o.file_), last_seq_(o.last_seq_), sync_(o.sync_) {
  o.file_ = nullptr;
}

EventLog& EventLog::operator=(EventLog&& o) noexcept {
  if (this != &o) {
    if (file_) std::fclose(file_);
    path_ = std::move(o.path_);
    file_ = o.file_;
    last_seq_ = o.last_seq_;
    sync_ = o.sync_;
    o.file_ = nullptr;
  }
  return *this;
}

EventLog EventLog::open(const std::filesystem::path& file, LogLoad& load, bool sync) {
  EventLog log;
  log.sync_ = sync;
  log.path_ = file;
  std::string content;
  if (std::filesystem::exists(file)) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }

  std::size_t pos = 0;
  std::size_t valid_end = 0;
  std::optional<std::size_t> bad_at;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::size_t end = complete ? nl : content.size();
    std::string_view line(content.data() + pos, end - pos);
    ++line_no;
    if (!line.empty()) {
      auto rec = complete ? decode_event_line(line) : std::nullopt;
      if (!rec) {
        if (!bad_at) bad_at = line_no;
      } else {
        if (bad_at) {
          throw Error(ErrorKind::internal, "corrupt_log", file.string(),
                      "event log line " + std::to_string(*bad_at) + " is corrupt but later records are intact");
        }
        const std::uint64_t expect = load.records.empty() ? 1 : load.records.back().seq + 1;
        if (rec->seq != expect) {
          throw Error(ErrorKind::internal, "seq_gap", file.string(),
                      "event log seq " + std::to_string(rec->seq) + " follows " + std::to_string(expect - 1));
        }
        load.records.push_back(std::move(*rec));
        valid_end = end + 1;
      }
    } else if (!bad_at) {
      valid_end = end + (complete ? 1 : 0);
    }
    pos = complete ? nl + 1 : content.size();
  }

  if (valid_end < content.size()) {
    load.truncated_bytes = content.size() - valid_end;
    load.warnings.push_back("event log: dropped " + std::to_string(load.truncated_bytes) +
                            " bytes of corrupt tail after seq " +
                            std::to_string(load.records.empty() ? 0 : load.records.back().seq));
    std::filesystem::resize_file(file, valid_end);
  }
  log.last_seq_ = load.records.empty() ? 0 : load.records.back().seq;

  log.file_ = std::fopen(file.c_str(), "ab");
  if (!log.file_) throw Error(ErrorKind::internal, "io_error", file.string(), "cannot open event log for append");
  return log;
}

void EventLog::append(const EventRecord& r) {
  if (r.seq != last_seq_ + 1) {
    throw Error(ErrorKind::internal, "seq_gap", path_.string(), "append out of sequence");
  }
  const std::string line = encode_event_line(r);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw Error(ErrorKind::internal, "io_error", path_.string(), "event log write failed");
  }
  if (sync_) ::fsync(::fileno(file_));
  last_seq_ = r.seq;
}

}  // namespace landtriage
