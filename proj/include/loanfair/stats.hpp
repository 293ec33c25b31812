#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace loanfair {

struct TestResult {
  /// U, H or r depending on the test.
  double statistic = 0.0;
  /// Two-sided.
  double p_value = 1.0;
  std::vector<std::size_t> group_sizes;
  /// "exact", "normal", "chi-squared" or "t".
  std::string method;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

struct StatsOptions {
  /// Mann-Whitney: permutation p-value when n_x + n_y is at most this.
  std::size_t exact_max_total = 20;
  /// Kruskal-Wallis: permutation p-value when every group has at most this
  /// many members and the number of assignments stays within the budget.
  std::size_t exact_max_group = 6;
  std::uint64_t exact_max_assignments = 20'000'000;
};

/// Midranks (1-based) of `values`, ties sharing their average rank.
std::vector<double> midranks(std::span<const double> values);

/// U of `x` against `y` (count of pairs with x > y plus half the ties).
/// Small samples use the exact permutation distribution of the rank sum,
/// larger ones the tie-corrected normal approximation. ContractError on an
/// empty sample.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, const StatsOptions& options = {});

/// Tie-corrected H. Small designs use the exact permutation distribution,
/// others chi-squared with k - 1 degrees of freedom. ContractError for
/// fewer than two groups or an empty group.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups, const StatsOptions& options = {});

/// Pearson r with a t-test on n - 2 degrees of freedom. ContractError for
/// unequal lengths, n < 3 or zero variance.
TestResult pearson_r(std::span<const double> x, std::span<const double> y);

/// P(Q >= q) for the studentized range of k means with infinite degrees of freedom.
double studentized_range_sf(double q, std::size_t k);

struct PairwiseComparison {
  std::size_t first = 0;
  std::size_t second = 0;
  double u = 0.0;
  double z = 0.0;
  double p_value = 1.0;

  friend bool operator==(const PairwiseComparison&, const PairwiseComparison&) = default;
};

struct SteelDwassResult {
  std::vector<PairwiseComparison> comparisons;
  /// "steel-dwass", or "bonferroni" when the range distribution could not
  /// be evaluated to tolerance.
  std::string adjustment;

  friend bool operator==(const SteelDwassResult&, const SteelDwassResult&) = default;
};

/// All-pairs comparison: each pair is ranked on its own, its tie-corrected
/// z is referred to the studentized range distribution.
SteelDwassResult steel_dwass(const std::vector<std::vector<double>>& groups);

nlohmann::json to_json(const TestResult& result);
TestResult test_result_from_json(const nlohmann::json& doc);

}  // namespace loanfair
