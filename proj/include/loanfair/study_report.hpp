#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "loanfair/culture.hpp"
#include "loanfair/fairness.hpp"
#include "loanfair/stats.hpp"

namespace loanfair {

/// Judgment totals of one session after supersession.
struct SessionMetrics {
  std::string session_id;
  std::size_t judged_fair = 0;
  std::size_t judged_unfair = 0;
  /// Undefined when the session made no fair or unfair judgment.
  std::optional<double> unfairness_ratio;
  std::optional<int> post_rating;

  friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;
};

/// One entry per id in `sessions` (in that order), built from the latest
/// judgment per (session, application).
std::vector<SessionMetrics> session_metrics(std::span<const std::string> sessions,
                                            std::span<const FairnessJudgment> judgments);

struct MetricSummary {
  std::size_t n = 0;
  double mean = 0.0;
  /// Sample standard deviation; 0 below two observations.
  double sd = 0.0;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

MetricSummary summarize(std::span<const double> values);

/// Low against High for one metric; the test is absent when either side is empty.
struct MetricContrast {
  MetricSummary low;
  MetricSummary high;
  std::optional<TestResult> test;
  bool significant = false;

  friend bool operator==(const MetricContrast&, const MetricContrast&) = default;
};

struct DimensionTable {
  Dimension dimension = Dimension::pd;
  double mean_score = 0.0;
  MetricContrast judged_fair;
  MetricContrast judged_unfair;
  MetricContrast unfairness_ratio;

  friend bool operator==(const DimensionTable&, const DimensionTable&) = default;
};

/// DI of the decisions adjusted by one culture group's suggestions.
struct GroupImpact {
  Dimension dimension = Dimension::pd;
  Level level = Level::low;
  std::size_t sessions = 0;
  std::size_t suggestions = 0;
  FairnessReport report;

  friend bool operator==(const GroupImpact&, const GroupImpact&) = default;
};

struct ImpactBlock {
  FairnessReport original;
  FairnessReport all_feedback;
  std::vector<GroupImpact> groups;

  friend bool operator==(const ImpactBlock&, const ImpactBlock&) = default;
};

/// DI per High/Low group for every dimension, plus the original model and
/// all feedback pooled.
ImpactBlock impact_by_group(const GroupAssignment& assignment, std::span<const WeightSuggestion> suggestions,
                            const ScoringModel& model, std::span<const Application> apps, const GroupSpec& group);

struct StudyReport {
  double alpha = 0.05;
  std::size_t sessions = 0;
  std::size_t unresolved_sessions = 0;
  std::vector<DimensionTable> tables;
  /// Across all twelve High/Low groups, on judged-unfair counts and ratios.
  std::optional<TestResult> between_groups_unfair;
  std::optional<TestResult> between_groups_ratio;
  std::optional<SteelDwassResult> post_hoc_unfair;
  /// Post-questionnaire rating against unfairness ratio.
  std::optional<TestResult> rating_vs_ratio;
  std::optional<ImpactBlock> impact;

  friend bool operator==(const StudyReport&, const StudyReport&) = default;
};

/// Group labels used by the between-group tests, e.g. "PD-L".
std::vector<std::string> group_labels();

StudyReport study_report(std::span<const SessionMetrics> metrics, const GroupAssignment& assignment,
                         std::optional<ImpactBlock> impact = std::nullopt, double alpha = 0.05);

nlohmann::json to_json(const StudyReport& report);
StudyReport study_report_from_json(const nlohmann::json& doc);
std::string render_text(const StudyReport& report);

}  // namespace loanfair
