#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "loanfair/event_log.hpp"
#include "loanfair/feedback.hpp"

namespace loanfair {

/// Transport-independent request. `session` carries the X-Session-Id header.
struct ApiRequest {
  std::string method = "GET";
  std::string path = "/";
  std::map<std::string, std::string> query;
  std::string body;
  std::optional<std::string> session;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body = nlohmann::json::object();

  std::string text() const { return body.dump(); }
};

using Clock = std::function<Timestamp()>;
/// Wall clock in milliseconds since the epoch.
Timestamp system_clock_ms();

inline constexpr std::size_t kTaskloadScales = 6;
inline constexpr std::size_t kDefaultPageSize = 50;
inline constexpr std::size_t kMaxPageSize = 300;

struct SessionRecord {
  std::string session_id;
  std::string country;
  std::string registered_residence;
  std::string registered_birth_country;
  std::string questionnaire_residence;
  std::string questionnaire_nationality;
  Timestamp created_at = 0;
  std::optional<int> pre_rating;
  std::optional<int> post_rating;
  std::optional<std::array<int, kTaskloadScales>> taskload;
  Timestamp last_timestamp = 0;
  std::size_t interactions = 0;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// Everything the event log determines.
struct ServiceSnapshot {
  FeedbackLedger ledger;
  std::map<std::string, SessionRecord> sessions;
  std::uint64_t events = 0;

  friend bool operator==(const ServiceSnapshot&, const ServiceSnapshot&) = default;
};

struct ServiceOptions {
  GroupSpec group{"nationality", "foreign", {}};
  /// Empty: in-memory only. Otherwise events go to `<log_dir>/events.ndjson`
  /// and an existing log is replayed on construction.
  std::filesystem::path log_dir;
  Clock clock;
  /// Seeds session token generation; random when absent.
  std::optional<std::uint64_t> token_seed;
  /// Served verbatim at GET /openapi.json when set.
  std::filesystem::path openapi_path;
};

struct RouteInfo {
  std::string method;
  /// Path template, e.g. "/applications/{id}".
  std::string path;
};

/// Routing, validation and state for the HTTP API. Writes are validated,
/// appended to the log, then applied; reads see every acknowledged write.
class ApiCore {
 public:
  ApiCore(ScoringModel model, std::vector<Application> applications, ServiceOptions options = {});
  ~ApiCore();
  ApiCore(const ApiCore&) = delete;
  ApiCore& operator=(const ApiCore&) = delete;

  ApiResponse handle(const ApiRequest& request);

  /// Rebuilds the state from a complete log. On a bad line throws
  /// ReplayError and keeps the current state. Returns the event count.
  std::size_t replay(std::istream& log);

  ServiceSnapshot snapshot() const;
  const ScoringModel& model() const noexcept { return model_; }
  const std::vector<Application>& applications() const noexcept { return applications_; }
  const std::vector<Prediction>& predictions() const noexcept { return predictions_; }
  /// Path of the event log, empty when not persisting.
  std::filesystem::path log_path() const;

  static const std::vector<RouteInfo>& routes();

 private:
  ApiResponse dispatch(const ApiRequest& request);

  void check(const ServiceSnapshot& state, const EventRecord& event) const;
  void apply(ServiceSnapshot& state, const EventRecord& event) const;
  /// Validate, log, apply. Caller holds the write lock.
  void commit(const EventRecord& event);
  Timestamp next_timestamp(const std::string& session_id);
  std::string new_token();

  const SessionRecord& require_session(const std::optional<std::string>& token) const;
  const Application& require_application(const std::string& id) const;
  std::size_t application_index(const std::string& id) const;

  ApiResponse create_session(const ApiRequest& request);
  ApiResponse get_session(const std::string& id) const;
  ApiResponse post_interaction(const std::string& id, const ApiRequest& request);
  ApiResponse post_rating(const std::string& id, const ApiRequest& request);
  ApiResponse post_taskload(const std::string& id, const ApiRequest& request);
  ApiResponse get_overview(const ApiRequest& request) const;
  ApiResponse get_model() const;
  ApiResponse list_applications(const ApiRequest& request) const;
  ApiResponse get_application(const std::string& id, const ApiRequest& request) const;
  ApiResponse post_judgment(const std::string& id, const ApiRequest& request);
  ApiResponse post_weights(const std::string& id, const ApiRequest& request);
  ApiResponse get_similar(const std::string& id, const ApiRequest& request) const;
  ApiResponse get_compare(const std::string& id, const std::string& other) const;
  ApiResponse get_fairness(const ApiRequest& request) const;
  ApiResponse get_openapi() const;

  ScoringModel model_;
  std::vector<Application> applications_;
  std::vector<Prediction> predictions_;
  std::map<std::string, std::size_t> index_;
  ServiceOptions options_;
  ServiceSnapshot state_;
  std::unique_ptr<EventLogWriter> writer_;
  std::uint64_t token_state_ = 0;
  mutable std::shared_mutex mutex_;
};

/// JSON error body: {"error": {"code", "message", "field"?}}.
ApiResponse error_response(int status, const std::string& code, const std::string& message,
                           const std::string& field = {});

}  // namespace loanfair
