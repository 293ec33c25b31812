#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "loanfair/dataset.hpp"
#include "loanfair/model.hpp"

namespace loanfair {

/// Four-fifths rule threshold.
inline constexpr double kDisparateImpactThreshold = 0.8;

struct GroupSpec {
  std::string attribute;
  std::string protected_value;
  /// Empty means "every other value".
  std::vector<std::string> reference_values;

  bool is_reference(const std::string& value) const;
};

/// Checks that the protected and reference values are categories of `attribute`.
void validate(const GroupSpec& group, const AttributeSpec& attribute);

enum class Verdict { fair, unfair };
std::string_view to_string(Verdict verdict);

struct GroupCounts {
  std::size_t protected_accepted = 0;
  std::size_t protected_rejected = 0;
  std::size_t reference_accepted = 0;
  std::size_t reference_rejected = 0;

  friend bool operator==(const GroupCounts&, const GroupCounts&) = default;
};

struct FairnessReport {
  double disparate_impact = 0.0;
  double protected_accept_rate = 0.0;
  double reference_accept_rate = 0.0;
  Verdict verdict = Verdict::fair;
  GroupCounts counts;

  friend bool operator==(const FairnessReport&, const FairnessReport&) = default;
};

struct GroupDecision {
  std::string group_value;
  Decision decision = Decision::rejected;
};

/// accept_rate(protected) / accept_rate(reference); unfair below 0.8.
/// ContractError on an empty group, UndefinedRatioError when the reference
/// group accepts nobody.
FairnessReport disparate_impact(std::span<const GroupDecision> decisions, const GroupSpec& group);

/// Pairs each prediction with the application's category label for the
/// group attribute. Predictions must be aligned with `apps`.
std::vector<GroupDecision> group_decisions(const AttributeSpec& attribute, std::span<const Application> apps,
                                           std::span<const Prediction> preds);

/// Predicts every application with `model` and reports DI on `group`.
FairnessReport audit(const ScoringModel& model, std::span<const Application> apps, const GroupSpec& group);

/// (TPR + TNR) / 2 against ground-truth labels.
double balanced_accuracy(std::span<const Prediction> preds, std::span<const Decision> truth);

enum class JudgmentVerdict { fair, unfair, cleared };
std::string_view to_string(JudgmentVerdict verdict);
JudgmentVerdict parse_judgment_verdict(std::string_view text);

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

struct FairnessJudgment {
  std::string session_id;
  std::string application_id;
  JudgmentVerdict verdict = JudgmentVerdict::cleared;
  bool needs_human = false;
  Timestamp timestamp = 0;

  friend bool operator==(const FairnessJudgment&, const FairnessJudgment&) = default;
};

/// Last judgment per (session, application), in input order. Entries whose
/// latest verdict is `cleared` and carry no needs-human flag are dropped.
std::vector<FairnessJudgment> effective_judgments(std::span<const FairnessJudgment> judgments);

/// unfair / (fair + unfair) over the given judgments (needs-human and
/// cleared entries count toward neither). UndefinedRatioError when there
/// are no fair or unfair judgments.
double unfairness_ratio(std::span<const FairnessJudgment> judgments);

/// Per-session ratio (after supersession) averaged across sessions that
/// made at least one fair/unfair judgment.
double mean_unfairness_ratio(std::span<const FairnessJudgment> judgments);

struct OverviewCounts {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t judged_fair = 0;
  std::size_t judged_unfair = 0;
  std::size_t needs_human = 0;

  friend bool operator==(const OverviewCounts&, const OverviewCounts&) = default;
};

/// Decision counters plus the latest markup per application.
OverviewCounts overview_counts(std::span<const Prediction> preds, std::span<const FairnessJudgment> judgments);

nlohmann::json to_json(const FairnessReport& report);
FairnessReport fairness_report_from_json(const nlohmann::json& doc);
/// Fixed-width table for terminal display.
std::string render_text(const FairnessReport& report, const GroupSpec& group);

}  // namespace loanfair
