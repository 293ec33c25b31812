#include "loanfair/api.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "loanfair/error.hpp"
#include "loanfair/explain.hpp"
#include "loanfair/filter.hpp"

namespace loanfair {

using nlohmann::json;

namespace {

class HttpError : public Error {
 public:
  HttpError(int status, std::string code, const std::string& message)
      : Error(std::move(code), message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

const std::vector<std::string> kInteractionKinds = {"filter",   "sort",       "select_application", "compare",
                                                    "judgment", "suggestion", "rating"};

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : path) {
    if (c == '/') {
      if (!current.empty()) parts.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw HttpError(400, "invalid_json", "request body is not valid JSON");
  if (!doc.is_object()) throw ValidationError("body", "expected a JSON object");
  return doc;
}

std::optional<std::string> query_value(const ApiRequest& request, const std::string& key) {
  if (auto it = request.query.find(key); it != request.query.end() && !it->second.empty()) return it->second;
  return std::nullopt;
}

std::size_t parse_count(const std::string& text, const std::string& field) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError(field, "expected a non-negative integer");
  return v;
}

double parse_real(const std::string& text, const std::string& field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ValidationError(field, "expected a number");
  return v;
}

std::optional<int> optional_rating(const json& body, const std::string& field) {
  if (!body.contains(field) || body.at(field).is_null()) return std::nullopt;
  const json& v = body.at(field);
  if (!v.is_number_integer()) throw ValidationError(field, "expected an integer from 1 to 7");
  const auto r = v.get<std::int64_t>();
  if (r < 1 || r > 7) throw ValidationError(field, "expected an integer from 1 to 7");
  return static_cast<int>(r);
}

std::string optional_text(const json& body, const std::string& field) {
  if (!body.contains(field) || body.at(field).is_null()) return {};
  if (!body.at(field).is_string()) throw ValidationError(field, "expected a string");
  return body.at(field).get<std::string>();
}

std::array<int, kTaskloadScales> taskload_scores(const json& payload) {
  if (!payload.contains("scores") || !payload.at("scores").is_array() ||
      payload.at("scores").size() != kTaskloadScales)
    throw ValidationError("scores", "expected six integers from 0 to 100");
  std::array<int, kTaskloadScales> out{};
  for (std::size_t i = 0; i < kTaskloadScales; ++i) {
    const json& v = payload.at("scores")[i];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 100)
      throw ValidationError("scores", "expected six integers from 0 to 100");
    out[i] = static_cast<int>(v.get<std::int64_t>());
  }
  return out;
}

json display_value(const AttributeSpec& spec, const Application& app) {
  auto it = app.values.find(spec.name);
  if (it == app.values.end() || !it->second) return nullptr;
  if (spec.is_categorical()) {
    const auto idx = static_cast<std::size_t>(*it->second);
    return idx < spec.categories.size() ? json(spec.categories[idx]) : json(*it->second);
  }
  return *it->second;
}

json judgment_json(const std::optional<FairnessJudgment>& j) {
  if (!j) return nullptr;
  return {{"verdict", to_string(j->verdict)}, {"needs_human", j->needs_human}, {"timestamp", j->timestamp}};
}

json prediction_json(const Prediction& p) {
  return {{"decision", to_string(p.decision)}, {"confidence", p.confidence}, {"utility", p.utility}};
}

json session_json(const SessionRecord& s, const FeedbackLedger& ledger) {
  json doc = {{"session_id", s.session_id},
              {"country", s.country},
              {"created_at", s.created_at},
              {"pre_rating", s.pre_rating ? json(*s.pre_rating) : json(nullptr)},
              {"post_rating", s.post_rating ? json(*s.post_rating) : json(nullptr)},
              {"taskload", s.taskload ? json(*s.taskload) : json(nullptr)},
              {"interactions", s.interactions},
              {"judgments", ledger.judgments(s.session_id).size()}};
  doc["suggestions"] = ledger.effective_suggestions({s.session_id}).size();
  const std::pair<const char*, const std::string*> extra[] = {
      {"registered_residence", &s.registered_residence},
      {"registered_birth_country", &s.registered_birth_country},
      {"questionnaire_residence", &s.questionnaire_residence},
      {"questionnaire_nationality", &s.questionnaire_nationality}};
  for (const auto& [key, value] : extra) doc[key] = value->empty() ? json(nullptr) : json(*value);
  return doc;
}

// Judgments across sessions, oldest first, so later markup wins.
std::vector<FairnessJudgment> judgments_by_time(const FeedbackLedger& ledger) {
  auto all = ledger.all_judgments();
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return all;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Timestamp system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

ApiResponse error_response(int status, const std::string& code, const std::string& message,
                           const std::string& field) {
  json err = {{"code", code}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  return {status, {{"error", err}}};
}

const std::vector<RouteInfo>& ApiCore::routes() {
  static const std::vector<RouteInfo> table = {
      {"POST", "/sessions"},
      {"GET", "/sessions/{id}"},
      {"POST", "/sessions/{id}/events"},
      {"POST", "/sessions/{id}/post_rating"},
      {"POST", "/sessions/{id}/taskload"},
      {"GET", "/overview"},
      {"GET", "/model"},
      {"GET", "/applications"},
      {"GET", "/applications/{id}"},
      {"POST", "/applications/{id}/judgment"},
      {"POST", "/applications/{id}/weights"},
      {"GET", "/applications/{id}/similar"},
      {"GET", "/applications/{id}/compare/{other}"},
      {"GET", "/reports/fairness"},
      {"GET", "/openapi.json"},
  };
  return table;
}

static std::set<std::string> application_ids(const std::vector<Application>& apps) {
  std::set<std::string> ids;
  for (const auto& a : apps) ids.insert(a.id);
  return ids;
}

ApiCore::ApiCore(ScoringModel model, std::vector<Application> applications, ServiceOptions options)
    : model_(std::move(model)),
      applications_(std::move(applications)),
      options_(std::move(options)),
      state_{FeedbackLedger(model_, application_ids(applications_)), {}, 0} {
  predictions_ = predict_all(model_, applications_);
  for (std::size_t i = 0; i < applications_.size(); ++i) index_[applications_[i].id] = i;
  if (!options_.clock) options_.clock = system_clock_ms;
  token_state_ = options_.token_seed ? *options_.token_seed : std::random_device{}() * 0x100000001ULL;
  if (!options_.log_dir.empty()) {
    const auto path = log_path();
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error("io_error", "cannot read event log " + path.string());
      replay(in);
    }
    writer_ = std::make_unique<EventLogWriter>(path);
  }
}

ApiCore::~ApiCore() = default;

std::filesystem::path ApiCore::log_path() const {
  return options_.log_dir.empty() ? std::filesystem::path{} : options_.log_dir / "events.ndjson";
}

ServiceSnapshot ApiCore::snapshot() const {
  std::shared_lock lock(mutex_);
  return state_;
}

std::size_t ApiCore::replay(std::istream& log) {
  const auto events = read_numbered_events(log);
  ServiceSnapshot fresh{FeedbackLedger(model_, application_ids(applications_)), {}, 0};
  for (const auto& [line, event] : events) {
    try {
      check(fresh, event);
      apply(fresh, event);
    } catch (const std::exception& e) {
      throw ReplayError(line, e.what());
    }
  }
  std::unique_lock lock(mutex_);
  state_ = std::move(fresh);
  return events.size();
}

void ApiCore::check(const ServiceSnapshot& state, const EventRecord& event) const {
  if (event.type == event_type::kSession) {
    if (event.session_id.empty()) throw ValidationError("session_id", "empty session id");
    if (state.sessions.count(event.session_id)) throw ValidationError("session_id", "session already exists");
    const json& p = event.payload;
    if (!p.contains("country") || !p.at("country").is_string() || p.at("country").get<std::string>().empty())
      throw ValidationError("country", "a country is required");
    optional_rating(p, "pre_rating");
    for (const char* key : {"registered_residence", "registered_birth_country", "questionnaire_residence",
                            "questionnaire_nationality"})
      optional_text(p, key);
    return;
  }
  auto it = state.sessions.find(event.session_id);
  if (it == state.sessions.end()) throw NotFoundError("unknown session '" + event.session_id + "'");
  if (event.timestamp < it->second.last_timestamp)
    throw ValidationError("timestamp", "timestamps must not decrease within a session");
  if (event.type == event_type::kJudgment) {
    state.ledger.validate(judgment_from_event(event));
  } else if (event.type == event_type::kSuggestion) {
    state.ledger.validate(suggestion_from_event(event));
  } else if (event.type == event_type::kInteraction) {
    const json& kind = event.payload.contains("kind") ? event.payload.at("kind") : json(nullptr);
    if (!kind.is_string() ||
        std::find(kInteractionKinds.begin(), kInteractionKinds.end(), kind.get<std::string>()) ==
            kInteractionKinds.end())
      throw ValidationError("kind", "unknown interaction kind");
  } else if (event.type == event_type::kPostRating) {
    if (!optional_rating(event.payload, "rating")) throw ValidationError("rating", "a rating is required");
  } else if (event.type == event_type::kTaskload) {
    taskload_scores(event.payload);
  } else {
    throw ValidationError("type", "unknown event type '" + event.type + "'");
  }
}

void ApiCore::apply(ServiceSnapshot& state, const EventRecord& event) const {
  if (event.type == event_type::kSession) {
    const json& p = event.payload;
    SessionRecord s;
    s.session_id = event.session_id;
    s.country = p.at("country").get<std::string>();
    s.registered_residence = optional_text(p, "registered_residence");
    s.registered_birth_country = optional_text(p, "registered_birth_country");
    s.questionnaire_residence = optional_text(p, "questionnaire_residence");
    s.questionnaire_nationality = optional_text(p, "questionnaire_nationality");
    s.pre_rating = optional_rating(p, "pre_rating");
    s.created_at = event.timestamp;
    s.last_timestamp = event.timestamp;
    state.sessions.emplace(s.session_id, s);
    state.ledger.add_session(s.session_id);
  } else {
    SessionRecord& s = state.sessions.at(event.session_id);
    if (event.type == event_type::kJudgment || event.type == event_type::kSuggestion) {
      state.ledger.apply(event);
    } else if (event.type == event_type::kInteraction) {
      ++s.interactions;
    } else if (event.type == event_type::kPostRating) {
      s.post_rating = optional_rating(event.payload, "rating");
    } else if (event.type == event_type::kTaskload) {
      s.taskload = taskload_scores(event.payload);
    }
    s.last_timestamp = event.timestamp;
  }
  ++state.events;
}

void ApiCore::commit(const EventRecord& event) {
  check(state_, event);
  if (writer_) writer_->append(event);
  apply(state_, event);
}

Timestamp ApiCore::next_timestamp(const std::string& session_id) {
  const Timestamp now = options_.clock();
  auto it = state_.sessions.find(session_id);
  return it == state_.sessions.end() ? now : std::max(now, it->second.last_timestamp);
}

std::string ApiCore::new_token() {
  for (;;) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(splitmix64(token_state_)));
    if (!state_.sessions.count(buf)) return buf;
  }
}

const SessionRecord& ApiCore::require_session(const std::optional<std::string>& token) const {
  if (!token || token->empty()) throw HttpError(401, "missing_session", "a session token is required");
  auto it = state_.sessions.find(*token);
  if (it == state_.sessions.end()) throw HttpError(401, "unknown_session", "unknown session '" + *token + "'");
  return it->second;
}

std::size_t ApiCore::application_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("unknown application '" + id + "'");
  return it->second;
}

const Application& ApiCore::require_application(const std::string& id) const {
  return applications_[application_index(id)];
}

ApiResponse ApiCore::handle(const ApiRequest& request) {
  try {
    if (request.method == "GET" || request.method == "HEAD") {
      std::shared_lock lock(mutex_);
      return dispatch(request);
    }
    std::unique_lock lock(mutex_);
    return dispatch(request);
  } catch (const HttpError& e) {
    return error_response(e.status(), e.code(), e.what());
  } catch (const ValidationError& e) {
    return error_response(422, e.code(), e.what(), e.field());
  } catch (const NotFoundError& e) {
    return error_response(404, e.code(), e.what());
  } catch (const UndefinedRatioError& e) {
    return error_response(422, e.code(), e.what());
  } catch (const ContractError& e) {
    return error_response(422, e.code(), e.what());
  } catch (const SchemaError& e) {
    return error_response(422, e.code(), e.what());
  } catch (const Error& e) {
    return error_response(500, e.code(), e.what());
  } catch (const json::exception& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

ApiResponse ApiCore::dispatch(const ApiRequest& request) {
  const auto parts = split_path(request.path);
  const std::string& m = request.method;
  bool path_known = false;
  for (const auto& route : routes()) {
    const auto pattern = split_path(route.path);
    if (pattern.size() != parts.size()) continue;
    std::vector<std::string> params;
    bool ok = true;
    for (std::size_t i = 0; i < parts.size() && ok; ++i) {
      if (pattern[i].front() == '{') params.push_back(parts[i]);
      else ok = pattern[i] == parts[i];
    }
    if (!ok) continue;
    path_known = true;
    if (route.method != m && !(route.method == "GET" && m == "HEAD")) continue;

    const std::string& p = route.path;
    if (p == "/sessions") return create_session(request);
    if (p == "/sessions/{id}") return get_session(params[0]);
    if (p == "/sessions/{id}/events") return post_interaction(params[0], request);
    if (p == "/sessions/{id}/post_rating") return post_rating(params[0], request);
    if (p == "/sessions/{id}/taskload") return post_taskload(params[0], request);
    if (p == "/overview") return get_overview(request);
    if (p == "/model") return get_model();
    if (p == "/applications") return list_applications(request);
    if (p == "/applications/{id}") return get_application(params[0], request);
    if (p == "/applications/{id}/judgment") return post_judgment(params[0], request);
    if (p == "/applications/{id}/weights") return post_weights(params[0], request);
    if (p == "/applications/{id}/similar") return get_similar(params[0], request);
    if (p == "/applications/{id}/compare/{other}") return get_compare(params[0], params[1]);
    if (p == "/reports/fairness") return get_fairness(request);
    if (p == "/openapi.json") return get_openapi();
  }
  if (path_known) throw HttpError(405, "method_not_allowed", m + " is not allowed on " + request.path);
  throw HttpError(404, "not_found", "no route for " + request.path);
}

ApiResponse ApiCore::create_session(const ApiRequest& request) {
  const json body = parse_body(request.body);
  json payload = json::object();
  if (!body.contains("country") || !body.at("country").is_string() ||
      body.at("country").get<std::string>().empty())
    throw ValidationError("country", "a country is required");
  payload["country"] = body.at("country");
  if (auto r = optional_rating(body, "pre_rating")) payload["pre_rating"] = *r;
  for (const char* key : {"registered_residence", "registered_birth_country", "questionnaire_residence",
                          "questionnaire_nationality"})
    if (auto v = optional_text(body, key); !v.empty()) payload[key] = v;

  EventRecord event{event_type::kSession, new_token(), "", payload, options_.clock()};
  commit(event);
  return {201, {{"session_id", event.session_id}, {"created_at", event.timestamp}}};
}

ApiResponse ApiCore::get_session(const std::string& id) const {
  return {200, session_json(require_session(id), state_.ledger)};
}

ApiResponse ApiCore::post_interaction(const std::string& id, const ApiRequest& request) {
  require_session(id);
  const json body = parse_body(request.body);
  if (!body.contains("kind") || !body.at("kind").is_string())
    throw ValidationError("kind", "expected one of filter, sort, select_application, compare, judgment, "
                                  "suggestion, rating");
  json payload = {{"kind", body.at("kind")},
                  {"payload", body.contains("payload") ? body.at("payload") : json::object()}};
  const std::string app = optional_text(body, "application_id");
  EventRecord event{event_type::kInteraction, id, app, payload, next_timestamp(id)};
  commit(event);
  return {200, {{"session_id", id}, {"kind", body.at("kind")}, {"timestamp", event.timestamp},
                {"sequence", state_.events}}};
}

ApiResponse ApiCore::post_rating(const std::string& id, const ApiRequest& request) {
  require_session(id);
  const json body = parse_body(request.body);
  const auto rating = optional_rating(body, "rating");
  if (!rating) throw ValidationError("rating", "a rating is required");
  EventRecord event{event_type::kPostRating, id, "", {{"rating", *rating}}, next_timestamp(id)};
  commit(event);
  return {200, session_json(state_.sessions.at(id), state_.ledger)};
}

ApiResponse ApiCore::post_taskload(const std::string& id, const ApiRequest& request) {
  require_session(id);
  const json body = parse_body(request.body);
  const auto scores = taskload_scores(body);
  EventRecord event{event_type::kTaskload, id, "", {{"scores", scores}}, next_timestamp(id)};
  commit(event);
  return {200, session_json(state_.sessions.at(id), state_.ledger)};
}

ApiResponse ApiCore::get_overview(const ApiRequest& request) const {
  std::vector<FairnessJudgment> judgments;
  const bool scoped = request.session.has_value();
  if (scoped) judgments = state_.ledger.judgments(require_session(request.session).session_id);
  else judgments = judgments_by_time(state_.ledger);
  const auto c = overview_counts(predictions_, judgments);
  return {200,
          {{"scope", scoped ? "session" : "all"},
           {"total", predictions_.size()},
           {"accepted", c.accepted},
           {"rejected", c.rejected},
           {"judged_fair", c.judged_fair},
           {"judged_unfair", c.judged_unfair},
           {"needs_human", c.needs_human}}};
}

ApiResponse ApiCore::get_model() const {
  std::ostringstream text;
  text << "Logistic regression over " << model_.size()
       << " attributes. Every attribute has a weight. The utility of an application is the constant term plus "
          "the sum of each weight times the attribute's value scaled to [0, 1]. The confidence is the sigmoid "
          "of the utility, and the application is accepted when the confidence is above 0.5.";
  json attrs = json::array();
  for (const auto& imp : importance(model_)) {
    const auto& spec = model_.attributes()[model_.index_of(imp.attribute)];
    attrs.push_back({{"name", imp.attribute},
                     {"kind", to_string(spec.kind)},
                     {"categories", spec.categories},
                     {"provenance", spec.provenance},
                     {"sensitive", spec.sensitive},
                     {"weight", imp.weight},
                     {"importance", imp.importance},
                     {"relative", imp.relative}});
  }
  json dists = json::array();
  for (const auto& d : value_distributions(model_, applications_, predictions_)) {
    json bins = json::array();
    for (const auto& b : d.bins)
      bins.push_back({{"label", b.label},
                      {"lower", b.lower},
                      {"upper", b.upper},
                      {"accepted", b.accepted},
                      {"rejected", b.rejected},
                      {"accepted_pct", b.accepted_pct},
                      {"rejected_pct", b.rejected_pct}});
    dists.push_back({{"attribute", d.attribute}, {"degenerate", d.degenerate}, {"bins", bins}});
  }
  const auto& info = model_.info();
  return {200,
          {{"algorithm", text.str()},
           {"intercept", model_.intercept()},
           {"attributes", attrs},
           {"value_distributions", dists},
           {"slider_bound", slider_bound(model_)},
           {"schema_hash", model_.schema_hash()},
           {"training",
            {{"l2_strength", info.l2_strength}, {"n_train", info.n_train}, {"iterations", info.iterations}}}}};
}

ApiResponse ApiCore::list_applications(const ApiRequest& request) const {
  const auto& attrs = model_.attributes();
  const auto preds = parse_filter(query_value(request, "filter").value_or(""), attrs);
  const auto sort =
      parse_sort(query_value(request, "sort").value_or(""), query_value(request, "order").value_or(""), attrs);
  const std::size_t offset = query_value(request, "offset") ? parse_count(*query_value(request, "offset"), "offset") : 0;
  const std::size_t limit =
      query_value(request, "limit") ? parse_count(*query_value(request, "limit"), "limit") : kDefaultPageSize;
  if (limit == 0 || limit > kMaxPageSize) throw ValidationError("limit", "expected 1 to 300");

  std::map<std::string, FairnessJudgment> markup;
  if (request.session) {
    for (const auto& j : state_.ledger.judgments(require_session(request.session).session_id))
      markup[j.application_id] = j;
  } else {
    for (const auto& j : judgments_by_time(state_.ledger)) markup[j.application_id] = j;
  }
  std::vector<ListRow> rows;
  rows.reserve(applications_.size());
  for (std::size_t i = 0; i < applications_.size(); ++i) {
    ListRow row{&applications_[i], predictions_[i], std::nullopt};
    if (auto it = markup.find(applications_[i].id); it != markup.end()) row.judgment = it->second;
    rows.push_back(std::move(row));
  }
  const auto selected = filter_and_sort(rows, preds, sort, attrs);
  json items = json::array();
  for (std::size_t i = offset; i < selected.size() && i < offset + limit; ++i) {
    const auto& r = selected[i];
    const std::string label = judgment_label(r.judgment);
    items.push_back({{"id", r.application->id},
                     {"decision", to_string(r.prediction.decision)},
                     {"confidence", r.prediction.confidence},
                     {"judgment", label.empty() ? json(nullptr) : json(label)},
                     {"needs_human", r.judgment && r.judgment->needs_human}});
  }
  return {200, {{"total", selected.size()}, {"offset", offset}, {"limit", limit}, {"items", items}}};
}

ApiResponse ApiCore::get_application(const std::string& id, const ApiRequest& request) const {
  const std::size_t idx = application_index(id);
  const Application& app = applications_[idx];
  const auto crit = criticality(model_, app);
  json attrs = json::array();
  for (std::size_t k : crit.order_by_weight()) {
    const auto& e = crit.entries[k];
    const auto& spec = model_.attributes()[k];
    attrs.push_back({{"name", e.attribute},
                     {"kind", to_string(spec.kind)},
                     {"value", display_value(spec, app)},
                     {"scaled", e.value},
                     {"weight", e.weight},
                     {"criticality", e.criticality},
                     {"provenance", spec.provenance},
                     {"sensitive", spec.sensitive}});
  }
  json doc = {{"id", app.id},
              {"prediction", prediction_json(predictions_[idx])},
              {"intercept", crit.intercept},
              {"attributes", attrs},
              {"slider_bound", slider_bound(model_)},
              {"judgment", nullptr},
              {"suggestion", nullptr}};
  if (request.session) {
    const auto& sid = require_session(request.session).session_id;
    doc["judgment"] = judgment_json(state_.ledger.judgment(sid, id));
    if (auto s = state_.ledger.suggestion(sid, id))
      doc["suggestion"] = {{"weights", s->weights}, {"timestamp", s->timestamp}};
  }
  return {200, doc};
}

ApiResponse ApiCore::post_judgment(const std::string& id, const ApiRequest& request) {
  const auto& session = require_session(request.session);
  require_application(id);
  const json body = parse_body(request.body);
  if (!body.contains("verdict") || !body.at("verdict").is_string())
    throw ValidationError("verdict", "expected fair, unfair or cleared");
  FairnessJudgment j;
  j.session_id = session.session_id;
  j.application_id = id;
  try {
    j.verdict = parse_judgment_verdict(body.at("verdict").get<std::string>());
  } catch (const std::exception&) {
    throw ValidationError("verdict", "expected fair, unfair or cleared");
  }
  if (body.contains("needs_human")) {
    if (!body.at("needs_human").is_boolean()) throw ValidationError("needs_human", "expected a boolean");
    j.needs_human = body.at("needs_human").get<bool>();
  }
  j.timestamp = next_timestamp(j.session_id);
  commit(to_event(j));
  return {200,
          {{"sequence", state_.ledger.sequence()},
           {"application_id", id},
           {"judgment", judgment_json(state_.ledger.judgment(j.session_id, id))}}};
}

ApiResponse ApiCore::post_weights(const std::string& id, const ApiRequest& request) {
  const auto& session = require_session(request.session);
  const std::size_t idx = application_index(id);
  const json body = parse_body(request.body);
  if (!body.contains("weights") || !body.at("weights").is_object() || body.at("weights").empty())
    throw ValidationError("weights", "expected an object of attribute weights");
  WeightSuggestion s;
  s.session_id = session.session_id;
  s.application_id = id;
  for (const auto& [name, value] : body.at("weights").items()) {
    if (!value.is_number()) throw ValidationError(name, "expected a number");
    s.weights[name] = value.get<double>();
  }
  s.timestamp = next_timestamp(s.session_id);
  commit(to_event(s));

  std::vector<double> w = model_.weights();
  for (const auto& [name, value] : s.weights) w[model_.index_of(name)] = value;
  return {200,
          {{"sequence", state_.ledger.sequence()},
           {"application_id", id},
           {"weights", s.weights},
           {"original", prediction_json(predictions_[idx])},
           {"preview", prediction_json(predict_with_weights(model_, w, applications_[idx]))}}};
}

ApiResponse ApiCore::get_similar(const std::string& id, const ApiRequest& request) const {
  const Application& target = require_application(id);
  const double lo = query_value(request, "lo") ? parse_real(*query_value(request, "lo"), "lo") : 0.0;
  const double hi = query_value(request, "hi") ? parse_real(*query_value(request, "hi"), "hi") : 1.0;
  if (lo < 0.0 || lo > 1.0) throw ValidationError("lo", "expected a value in [0, 1]");
  if (hi < lo || hi > 1.0) throw ValidationError("hi", "expected a value in [lo, 1]");
  json items = json::array();
  for (const auto& s : similar_applications(model_, target, applications_, lo, hi))
    items.push_back({{"id", s.application_id},
                     {"similarity", s.similarity},
                     {"confidence", s.confidence},
                     {"decision", to_string(s.decision)},
                     {"selectable", s.selectable}});
  return {200, {{"application_id", id}, {"lo", lo}, {"hi", hi}, {"items", items}}};
}

ApiResponse ApiCore::get_compare(const std::string& id, const std::string& other) const {
  const Application& a = require_application(id);
  const Application& b = require_application(other);
  const auto sims = attribute_similarities(a, b, model_.attributes(), model_.scaling());
  json attrs = json::array();
  for (std::size_t k = 0; k < sims.size(); ++k) {
    const auto& spec = model_.attributes()[k];
    attrs.push_back({{"name", spec.name},
                     {"first", display_value(spec, a)},
                     {"second", display_value(spec, b)},
                     {"similarity", sims[k]}});
  }
  return {200,
          {{"first", id},
           {"second", other},
           {"similarity", similarity(model_, a, b)},
           {"attributes", attrs}}};
}

ApiResponse ApiCore::get_fairness(const ApiRequest& request) const {
  GroupSpec group = options_.group;
  if (auto attr = query_value(request, "group_attribute"); attr && *attr != group.attribute) {
    group = GroupSpec{*attr, "", {}};
    if (!query_value(request, "protected"))
      throw ValidationError("protected", "required when group_attribute is given");
  }
  if (auto p = query_value(request, "protected")) group.protected_value = *p;
  if (auto r = query_value(request, "reference")) {
    group.reference_values.clear();
    std::stringstream ss(*r);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) group.reference_values.push_back(item);
  }
  if (!model_.has_attribute(group.attribute))
    throw ValidationError("group_attribute", "unknown attribute '" + group.attribute + "'");
  validate(group, model_.attributes()[model_.index_of(group.attribute)]);

  const auto suggestions = state_.ledger.effective_suggestions();
  const auto adjusted = aggregate(suggestions, model_, applications_);
  const auto delta = fairness_delta(adjusted, model_, applications_, group);
  json per_participant = json::object();
  for (const auto& [sid, list] : state_.ledger.suggestions_by_session()) {
    try {
      const auto reports = per_participant_models({{sid, list}}, model_, applications_, group);
      if (auto it = reports.find(sid); it != reports.end()) per_participant[sid] = to_json(it->second);
    } catch (const UndefinedRatioError&) {
      per_participant[sid] = nullptr;
    }
  }
  return {200,
          {{"group",
            {{"attribute", group.attribute},
             {"protected", group.protected_value},
             {"reference", group.reference_values}}},
           {"applications", applications_.size()},
           {"suggestions", suggestions.size()},
           {"overridden", adjusted.overridden_count()},
           {"before", to_json(delta.before)},
           {"after", to_json(delta.after)},
           {"per_participant", per_participant}}};
}

ApiResponse ApiCore::get_openapi() const {
  if (options_.openapi_path.empty()) throw HttpError(404, "not_found", "no API description configured");
  std::ifstream in(options_.openapi_path);
  if (!in) throw Error("io_error", "cannot read " + options_.openapi_path.string());
  return {200, json::parse(in)};
}

}  // namespace loanfair
