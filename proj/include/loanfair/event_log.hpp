#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "loanfair/fairness.hpp"

namespace loanfair {

/// One line of a newline-delimited JSON event log.
struct EventRecord {
  std::string type;
  std::string session_id;
  std::string application_id;
  nlohmann::json payload = nlohmann::json::object();
  Timestamp timestamp = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Canonical single-line encoding (sorted keys, shortest round-trip
/// numbers); serialize(parse_event(s)) == s for any line this produced.
std::string serialize(const EventRecord& event);

/// Throws std::invalid_argument describing the defect.
EventRecord parse_event(std::string_view line);

/// Every record of a log. Blank lines are skipped; a line that fails to
/// decode raises ReplayError carrying its 1-based line number.
std::vector<EventRecord> read_event_log(std::istream& in);

struct NumberedEvent {
  std::size_t line = 0;
  EventRecord event;
};
/// As read_event_log, keeping each record's line number.
std::vector<NumberedEvent> read_numbered_events(std::istream& in);
std::vector<EventRecord> read_event_log(const std::filesystem::path& path);
void write_event_log(std::span<const EventRecord> events, std::ostream& out);

/// Append-only writer. Each append is flushed before it returns.
class EventLogWriter {
 public:
  explicit EventLogWriter(const std::filesystem::path& path);
  void append(const EventRecord& event);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace loanfair
