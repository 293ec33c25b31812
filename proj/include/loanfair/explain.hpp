#pragma once

#include <span>
#include <string>
#include <vector>

#include "loanfair/model.hpp"

namespace loanfair {

struct CriticalityEntry {
  std::string attribute;
  double weight = 0.0;
  /// Scaled attribute value x_k in [0, 1].
  double value = 0.0;
  /// w_k * x_k.
  double criticality = 0.0;
};

struct CriticalityVector {
  std::vector<CriticalityEntry> entries;
  double intercept = 0.0;

  /// intercept + sum of entries, in attribute order (matches predict).
  double utility() const;
  /// Indices of `entries` sorted by weight, descending; ties keep attribute order.
  std::vector<std::size_t> order_by_weight() const;
};

CriticalityVector criticality(const ScoringModel& model, const Application& app);

struct AttributeImportance {
  std::string attribute;
  double weight = 0.0;
  /// |w_k|
  double importance = 0.0;
  /// |w_k| / max_j |w_j| (0 when every weight is 0).
  double relative = 0.0;
};

/// Sorted by importance, descending.
std::vector<AttributeImportance> importance(const ScoringModel& model);

struct ValueBin {
  double lower = 0.0;
  double upper = 0.0;
  /// Category label for categorical attributes, "[lo, hi)" range otherwise.
  std::string label;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  /// Percentages of all applications, so one attribute's bins sum to 100.
  double accepted_pct = 0.0;
  double rejected_pct = 0.0;
};

struct ValueDistribution {
  std::string attribute;
  std::vector<ValueBin> bins;
  /// Constant attribute: all applications collapsed into one bin.
  bool degenerate = false;
};

inline constexpr std::size_t kValueBins = 5;

/// Continuous attributes: five equal-width bins from min to max of the raw
/// values (the last bin closed). Categorical attributes: one bin per category.
ValueDistribution value_distribution(const AttributeSpec& attribute, std::span<const Application> apps,
                                     std::span<const Prediction> preds);
std::vector<ValueDistribution> value_distributions(const ScoringModel& model, std::span<const Application> apps,
                                                   std::span<const Prediction> preds);

/// Per-attribute similarity: 1 - |x - y| / range for continuous attributes
/// (values clamped to the range), equality for categorical ones.
std::vector<double> attribute_similarities(const Application& a, const Application& b,
                                           std::span<const AttributeSpec> specs,
                                           std::span<const FeatureScaling> ranges);
/// Mean of attribute_similarities; symmetric and within [0, 1].
double similarity(const Application& a, const Application& b, std::span<const AttributeSpec> specs,
                  std::span<const FeatureScaling> ranges);
double similarity(const ScoringModel& model, const Application& a, const Application& b);

struct SimilarApplication {
  std::string application_id;
  double similarity = 0.0;
  double confidence = 0.0;
  Decision decision = Decision::rejected;
  /// False when the similarity lies outside the requested range.
  bool selectable = false;
};

/// Annotates every pool application (the target itself excluded) with its
/// similarity to `target` and its prediction. Requires 0 <= lo <= hi <= 1.
std::vector<SimilarApplication> similar_applications(const ScoringModel& model, const Application& target,
                                                     std::span<const Application> pool, double lo, double hi);

}  // namespace loanfair
