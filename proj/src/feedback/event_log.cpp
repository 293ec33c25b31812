#include "loanfair/event_log.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "loanfair/csv.hpp"
#include "loanfair/error.hpp"

namespace loanfair {

std::string serialize(const EventRecord& event) {
  nlohmann::json doc{{"type", event.type},
                     {"session_id", event.session_id},
                     {"application_id", event.application_id},
                     {"payload", event.payload},
                     {"timestamp", event.timestamp}};
  return doc.dump();
}

EventRecord parse_event(std::string_view line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("record is not a JSON object");
  EventRecord event;
  try {
    event.type = doc.at("type").get<std::string>();
    event.session_id = doc.at("session_id").get<std::string>();
    event.application_id = doc.value("application_id", std::string{});
    event.payload = doc.value("payload", nlohmann::json::object());
    event.timestamp = doc.at("timestamp").get<Timestamp>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("missing or mistyped field: ") + e.what());
  }
  if (event.type.empty()) throw std::invalid_argument("empty event type");
  return event;
}

std::vector<EventRecord> read_event_log(std::istream& in) {
  std::vector<EventRecord> events;
  for (auto& n : read_numbered_events(in)) events.push_back(std::move(n.event));
  return events;
}

std::vector<NumberedEvent> read_numbered_events(std::istream& in) {
  std::vector<NumberedEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty()) continue;
    try {
      events.push_back({line_no, parse_event(line)});
    } catch (const std::invalid_argument& e) {
      throw ReplayError(line_no, e.what());
    }
  }
  return events;
}

std::vector<EventRecord> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open event log " + path.string());
  return read_event_log(in);
}

void write_event_log(std::span<const EventRecord> events, std::ostream& out) {
  for (const auto& e : events) out << serialize(e) << '\n';
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw Error("io_error", "cannot open event log " + path_.string() + " for appending");
}

void EventLogWriter::append(const EventRecord& event) {
  const std::string line = serialize(event) + '\n';
  std::lock_guard lock(mutex_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw Error("io_error", "failed to append to event log " + path_.string());
}

}  // namespace loanfair
