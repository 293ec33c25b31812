#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "loanfair/event_log.hpp"
#include "loanfair/fairness.hpp"
#include "loanfair/model.hpp"

namespace loanfair {

/// A user's proposed coefficients for one application. Attributes absent
/// from `weights` keep the model's value.
struct WeightSuggestion {
  std::string session_id;
  std::string application_id;
  std::map<std::string, double> weights;
  Timestamp timestamp = 0;

  friend bool operator==(const WeightSuggestion&, const WeightSuggestion&) = default;
};

/// Symmetric drag range allowed for suggested weights: +/- 2 * max |w|.
double slider_bound(const ScoringModel& model);

struct Acknowledgment {
  /// Number of feedback events applied so far, this one included.
  std::uint64_t sequence = 0;
};

namespace event_type {
inline constexpr const char* kJudgment = "judgment";
inline constexpr const char* kSuggestion = "suggestion";
inline constexpr const char* kSession = "session";
inline constexpr const char* kInteraction = "interaction";
inline constexpr const char* kPostRating = "post_rating";
inline constexpr const char* kTaskload = "taskload";
}  // namespace event_type

EventRecord to_event(const FairnessJudgment& judgment);
EventRecord to_event(const WeightSuggestion& suggestion);
FairnessJudgment judgment_from_event(const EventRecord& event);
WeightSuggestion suggestion_from_event(const EventRecord& event);

/// Effective feedback state: the latest judgment and latest suggestion per
/// (session, application). Validates against the model and the set of
/// applications under review.
class FeedbackLedger {
 public:
  FeedbackLedger(const ScoringModel& model, std::set<std::string> application_ids);

  void add_session(const std::string& session_id);
  bool has_session(const std::string& session_id) const;

  /// Throw exactly what the matching record_* call would, without changing state.
  void validate(const FairnessJudgment& judgment) const;
  void validate(const WeightSuggestion& suggestion) const;

  /// NotFoundError for an unknown session or application.
  Acknowledgment record_judgment(const FairnessJudgment& judgment);
  /// As record_judgment, plus ValidationError naming the attribute for an
  /// unknown attribute or a value outside the slider bound.
  Acknowledgment record_suggestion(const WeightSuggestion& suggestion);

  /// Dispatches judgment/suggestion events; other types are ignored.
  /// Sessions referenced by the event are registered implicitly.
  void apply(const EventRecord& event);

  /// Judgments currently in effect for one session (empty if unknown).
  std::vector<FairnessJudgment> judgments(const std::string& session_id) const;
  std::vector<FairnessJudgment> all_judgments() const;
  std::optional<FairnessJudgment> judgment(const std::string& session_id, const std::string& application_id) const;

  /// Latest suggestions, ordered by (application, session).
  std::vector<WeightSuggestion> effective_suggestions() const;
  std::vector<WeightSuggestion> effective_suggestions(const std::set<std::string>& sessions) const;
  std::map<std::string, std::vector<WeightSuggestion>> suggestions_by_session() const;
  std::optional<WeightSuggestion> suggestion(const std::string& session_id, const std::string& application_id) const;

  std::uint64_t sequence() const noexcept { return sequence_; }

  friend bool operator==(const FeedbackLedger& a, const FeedbackLedger& b) {
    return a.sessions_ == b.sessions_ && a.judgments_ == b.judgments_ && a.suggestions_ == b.suggestions_ &&
           a.sequence_ == b.sequence_;
  }

 private:
  void check_known(const std::string& session_id, const std::string& application_id) const;

  const ScoringModel* model_;
  std::set<std::string> application_ids_;
  double bound_;
  std::set<std::string> sessions_;
  std::map<std::string, std::map<std::string, FairnessJudgment>> judgments_;
  std::map<std::string, std::map<std::string, WeightSuggestion>> suggestions_;
  std::uint64_t sequence_ = 0;
};

struct AdjustedDecision {
  std::string application_id;
  /// Effective coefficient vector in model attribute order.
  std::vector<double> weights;
  Prediction original;
  Prediction adjusted;
  bool overridden = false;
  std::size_t suggestion_count = 0;
};

/// Per-application decisions after applying averaged suggestions. This is
/// not a single coherent model: each application may carry its own weights.
struct AdjustedDecisionSet {
  std::vector<std::string> attribute_order;
  std::vector<AdjustedDecision> entries;

  std::size_t overridden_count() const;
};

/// For each (application, attribute) with at least one suggestion, the
/// effective weight is the mean of the suggested values; everything else
/// keeps the model's weight. Confidence is recomputed with the model's
/// intercept. Invariant under the order of `suggestions`.
AdjustedDecisionSet aggregate(std::span<const WeightSuggestion> suggestions, const ScoringModel& model,
                              std::span<const Application> apps);

struct FairnessDelta {
  FairnessReport before;
  FairnessReport after;
};

/// DI over the original and the adjusted decisions. `apps` must be the
/// applications `adjusted` was built from, in the same order.
FairnessDelta fairness_delta(const AdjustedDecisionSet& adjusted, const ScoringModel& model,
                             std::span<const Application> apps, const GroupSpec& group);

/// For each session: the mean of its suggested values per attribute, taken
/// across the applications it edited, applied as a global override; DI is
/// computed over all `apps`. Sessions without suggestions are skipped.
std::map<std::string, FairnessReport> per_participant_models(
    const std::map<std::string, std::vector<WeightSuggestion>>& by_session, const ScoringModel& model,
    std::span<const Application> apps, const GroupSpec& group);

}  // namespace loanfair
