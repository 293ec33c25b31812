#include "loanfair/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "loanfair/error.hpp"

namespace loanfair {

double slider_bound(const ScoringModel& model) { return 2.0 * model.max_abs_weight(); }

EventRecord to_event(const FairnessJudgment& judgment) {
  return {event_type::kJudgment, judgment.session_id, judgment.application_id,
          nlohmann::json{{"verdict", to_string(judgment.verdict)}, {"needs_human", judgment.needs_human}},
          judgment.timestamp};
}

EventRecord to_event(const WeightSuggestion& suggestion) {
  return {event_type::kSuggestion, suggestion.session_id, suggestion.application_id,
          nlohmann::json{{"weights", suggestion.weights}}, suggestion.timestamp};
}

FairnessJudgment judgment_from_event(const EventRecord& event) {
  FairnessJudgment j;
  j.session_id = event.session_id;
  j.application_id = event.application_id;
  j.verdict = parse_judgment_verdict(event.payload.at("verdict").get<std::string>());
  j.needs_human = event.payload.value("needs_human", false);
  j.timestamp = event.timestamp;
  return j;
}

WeightSuggestion suggestion_from_event(const EventRecord& event) {
  WeightSuggestion s;
  s.session_id = event.session_id;
  s.application_id = event.application_id;
  s.weights = event.payload.at("weights").get<std::map<std::string, double>>();
  s.timestamp = event.timestamp;
  return s;
}

FeedbackLedger::FeedbackLedger(const ScoringModel& model, std::set<std::string> application_ids)
    : model_(&model), application_ids_(std::move(application_ids)), bound_(slider_bound(model)) {}

void FeedbackLedger::add_session(const std::string& session_id) { sessions_.insert(session_id); }

bool FeedbackLedger::has_session(const std::string& session_id) const { return sessions_.count(session_id) > 0; }

void FeedbackLedger::check_known(const std::string& session_id, const std::string& application_id) const {
  if (!has_session(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
  if (!application_ids_.count(application_id)) throw NotFoundError("unknown application '" + application_id + "'");
}

void FeedbackLedger::validate(const FairnessJudgment& judgment) const {
  check_known(judgment.session_id, judgment.application_id);
}

void FeedbackLedger::validate(const WeightSuggestion& suggestion) const {
  check_known(suggestion.session_id, suggestion.application_id);
  for (const auto& [attribute, value] : suggestion.weights) {
    if (!model_->has_attribute(attribute)) throw ValidationError(attribute, "not an attribute of the model");
    if (!std::isfinite(value) || std::abs(value) > bound_)
      throw ValidationError(attribute, "weight must lie within [" + std::to_string(-bound_) + ", " +
                                           std::to_string(bound_) + "]");
  }
}

Acknowledgment FeedbackLedger::record_judgment(const FairnessJudgment& judgment) {
  validate(judgment);
  auto& per_app = judgments_[judgment.session_id];
  if (judgment.verdict == JudgmentVerdict::cleared && !judgment.needs_human)
    per_app.erase(judgment.application_id);
  else
    per_app[judgment.application_id] = judgment;
  return {++sequence_};
}

Acknowledgment FeedbackLedger::record_suggestion(const WeightSuggestion& suggestion) {
  validate(suggestion);
  suggestions_[suggestion.session_id][suggestion.application_id] = suggestion;
  return {++sequence_};
}

void FeedbackLedger::apply(const EventRecord& event) {
  if (event.type == event_type::kJudgment) {
    add_session(event.session_id);
    record_judgment(judgment_from_event(event));
  } else if (event.type == event_type::kSuggestion) {
    add_session(event.session_id);
    record_suggestion(suggestion_from_event(event));
  }
}

std::vector<FairnessJudgment> FeedbackLedger::judgments(const std::string& session_id) const {
  std::vector<FairnessJudgment> out;
  if (auto it = judgments_.find(session_id); it != judgments_.end())
    for (const auto& [app, j] : it->second) out.push_back(j);
  return out;
}

std::vector<FairnessJudgment> FeedbackLedger::all_judgments() const {
  std::vector<FairnessJudgment> out;
  for (const auto& [session, per_app] : judgments_)
    for (const auto& [app, j] : per_app) out.push_back(j);
  return out;
}

std::optional<FairnessJudgment> FeedbackLedger::judgment(const std::string& session_id,
                                                         const std::string& application_id) const {
  auto it = judgments_.find(session_id);
  if (it == judgments_.end()) return std::nullopt;
  auto jt = it->second.find(application_id);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::vector<WeightSuggestion> FeedbackLedger::effective_suggestions() const {
  std::vector<WeightSuggestion> out;
  for (const auto& [session, per_app] : suggestions_)
    for (const auto& [app, s] : per_app) out.push_back(s);
  std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) {
    return std::tie(l.application_id, l.session_id) < std::tie(r.application_id, r.session_id);
  });
  return out;
}

std::vector<WeightSuggestion> FeedbackLedger::effective_suggestions(const std::set<std::string>& sessions) const {
  auto all = effective_suggestions();
  std::erase_if(all, [&](const auto& s) { return !sessions.count(s.session_id); });
  return all;
}

std::map<std::string, std::vector<WeightSuggestion>> FeedbackLedger::suggestions_by_session() const {
  std::map<std::string, std::vector<WeightSuggestion>> out;
  for (const auto& [session, per_app] : suggestions_)
    for (const auto& [app, s] : per_app) out[session].push_back(s);
  return out;
}

std::optional<WeightSuggestion> FeedbackLedger::suggestion(const std::string& session_id,
                                                           const std::string& application_id) const {
  auto it = suggestions_.find(session_id);
  if (it == suggestions_.end()) return std::nullopt;
  auto jt = it->second.find(application_id);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::size_t AdjustedDecisionSet::overridden_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.overridden; }));
}

AdjustedDecisionSet aggregate(std::span<const WeightSuggestion> suggestions, const ScoringModel& model,
                              std::span<const Application> apps) {
  // Canonical order so that floating-point sums do not depend on arrival order.
  std::vector<const WeightSuggestion*> ordered;
  ordered.reserve(suggestions.size());
  for (const auto& s : suggestions) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](const auto* l, const auto* r) {
    return std::tie(l->application_id, l->session_id, l->timestamp) <
           std::tie(r->application_id, r->session_id, r->timestamp);
  });

  struct Accumulator {
    std::vector<double> sum;
    std::vector<std::size_t> count;
    std::size_t suggestions = 0;
  };
  std::map<std::string, Accumulator> per_app;
  for (const auto* s : ordered) {
    auto& acc = per_app[s->application_id];
    if (acc.sum.empty()) {
      acc.sum.assign(model.size(), 0.0);
      acc.count.assign(model.size(), 0);
    }
    ++acc.suggestions;
    for (const auto& [attribute, value] : s->weights) {
      const auto k = model.index_of(attribute);
      acc.sum[k] += value;
      ++acc.count[k];
    }
  }

  AdjustedDecisionSet out;
  out.attribute_order = model.attribute_order();
  out.entries.reserve(apps.size());
  for (const auto& app : apps) {
    AdjustedDecision entry;
    entry.application_id = app.id;
    entry.weights = model.weights();
    entry.original = predict(model, app);
    if (auto it = per_app.find(app.id); it != per_app.end()) {
      const auto& acc = it->second;
      for (std::size_t k = 0; k < model.size(); ++k)
        if (acc.count[k] > 0) entry.weights[k] = acc.sum[k] / static_cast<double>(acc.count[k]);
      entry.overridden = true;
      entry.suggestion_count = acc.suggestions;
      entry.adjusted = predict_with_weights(model, entry.weights, app);
    } else {
      entry.adjusted = entry.original;
    }
    out.entries.push_back(std::move(entry));
  }
  return out;
}

FairnessDelta fairness_delta(const AdjustedDecisionSet& adjusted, const ScoringModel& model,
                             std::span<const Application> apps, const GroupSpec& group) {
  if (adjusted.entries.size() != apps.size()) throw ContractError("adjusted decisions are not aligned with applications");
  const auto& attribute = model.attributes()[model.index_of(group.attribute)];
  validate(group, attribute);
  std::vector<Prediction> before, after;
  before.reserve(apps.size());
  after.reserve(apps.size());
  for (std::size_t i = 0; i < apps.size(); ++i) {
    if (adjusted.entries[i].application_id != apps[i].id)
      throw ContractError("adjusted decisions are not aligned with applications");
    before.push_back(adjusted.entries[i].original);
    after.push_back(adjusted.entries[i].adjusted);
  }
  return {disparate_impact(group_decisions(attribute, apps, before), group),
          disparate_impact(group_decisions(attribute, apps, after), group)};
}

std::map<std::string, FairnessReport> per_participant_models(
    const std::map<std::string, std::vector<WeightSuggestion>>& by_session, const ScoringModel& model,
    std::span<const Application> apps, const GroupSpec& group) {
  const auto& attribute = model.attributes()[model.index_of(group.attribute)];
  validate(group, attribute);
  std::map<std::string, FairnessReport> out;
  for (const auto& [session, suggestions] : by_session) {
    if (suggestions.empty()) continue;
    auto ordered = suggestions;
    std::sort(ordered.begin(), ordered.end(), [](const auto& l, const auto& r) {
      return std::tie(l.application_id, l.timestamp) < std::tie(r.application_id, r.timestamp);
    });
    std::vector<double> sum(model.size(), 0.0);
    std::vector<std::size_t> count(model.size(), 0);
    for (const auto& s : ordered) {
      for (const auto& [name, value] : s.weights) {
        const auto k = model.index_of(name);
        sum[k] += value;
        ++count[k];
      }
    }
    std::vector<double> weights = model.weights();
    for (std::size_t k = 0; k < model.size(); ++k)
      if (count[k] > 0) weights[k] = sum[k] / static_cast<double>(count[k]);

    std::vector<Prediction> preds;
    preds.reserve(apps.size());
    for (const auto& app : apps) preds.push_back(predict_with_weights(model, weights, app));
    out.emplace(session, disparate_impact(group_decisions(attribute, apps, preds), group));
  }
  return out;
}

}  // namespace loanfair
