#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loanfair/fairness.hpp"

namespace loanfair {

/// One row of the application list: the application, its prediction and
/// the caller's current markup.
struct ListRow {
  const Application* application = nullptr;
  Prediction prediction;
  std::optional<FairnessJudgment> judgment;
};

enum class FilterOp { eq, ne, lt, le, gt, ge, in_range };
std::string_view to_string(FilterOp op);

/// `field op value`. Fields are model attributes or one of id, decision,
/// confidence, judgment. Categorical values are category labels; `in`
/// takes an inclusive range `lo..hi`.
struct Predicate {
  std::string field;
  FilterOp op = FilterOp::eq;
  std::string text;
  std::string upper_text;
  double number = 0.0;
  double upper = 0.0;
};

/// Conjunction of `;`-separated predicates. ValidationError (field "filter")
/// on unknown fields, operators or values.
std::vector<Predicate> parse_filter(std::string_view filter, std::span<const AttributeSpec> attributes);

/// Rank used when sorting and comparing by judgment: 0 unmarked, 1 fair,
/// 2 unfair, 3 needs human input only.
int judgment_rank(const std::optional<FairnessJudgment>& judgment);
/// Text form: "", "fair", "unfair" or "needs_human".
std::string judgment_label(const std::optional<FairnessJudgment>& judgment);

bool matches(const Predicate& predicate, const ListRow& row, std::span<const AttributeSpec> attributes);

struct SortSpec {
  /// id, decision, confidence, judgment or a model attribute.
  std::string key = "id";
  bool descending = false;
};

/// ValidationError (field "sort" or "order") for an unknown key or order.
SortSpec parse_sort(std::string_view key, std::string_view order, std::span<const AttributeSpec> attributes);

/// Rows matching every predicate, stably ordered by the key with ties
/// broken by ascending id.
std::vector<ListRow> filter_and_sort(std::span<const ListRow> rows, std::span<const Predicate> predicates,
                                     const SortSpec& sort, std::span<const AttributeSpec> attributes);

}  // namespace loanfair
