#include "loanfair/filter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "loanfair/csv.hpp"
#include "loanfair/error.hpp"

namespace loanfair {

namespace {

const AttributeSpec* find_attribute(std::span<const AttributeSpec> attributes, std::string_view name) {
  for (const auto& a : attributes)
    if (a.name == name) return &a;
  return nullptr;
}

bool is_pseudo_field(std::string_view f) {
  return f == "id" || f == "decision" || f == "confidence" || f == "judgment";
}

std::optional<double> to_number(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Numeric form of a filter value for `field`.
double encode_value(std::string_view field, const std::string& text, std::span<const AttributeSpec> attributes) {
  auto fail = [&](const std::string& why) -> double {
    throw ValidationError("filter", "'" + text + "' " + why + " for '" + std::string(field) + "'");
  };
  if (field == "decision") {
    if (text == "accepted") return 1.0;
    if (text == "rejected") return 0.0;
    return fail("is not accepted or rejected");
  }
  if (field == "judgment") {
    if (text.empty() || text == "none") return 0.0;
    if (text == "fair") return 1.0;
    if (text == "unfair") return 2.0;
    if (text == "needs_human") return 3.0;
    return fail("is not none, fair, unfair or needs_human");
  }
  if (field == "confidence") {
    if (auto v = to_number(text)) return *v;
    return fail("is not a number");
  }
  const AttributeSpec* a = find_attribute(attributes, field);
  if (a->is_categorical()) {
    if (auto idx = a->category_index(text)) return static_cast<double>(*idx);
    return fail("is not a category");
  }
  if (auto v = to_number(text)) return *v;
  return fail("is not a number");
}

double row_value(std::string_view field, const ListRow& row) {
  if (field == "decision") return row.prediction.decision == Decision::accepted ? 1.0 : 0.0;
  if (field == "confidence") return row.prediction.confidence;
  if (field == "judgment") return static_cast<double>(judgment_rank(row.judgment));
  return row.application->value(std::string(field));
}

template <typename T>
bool compare(FilterOp op, const T& v, const T& lo, const T& hi) {
  switch (op) {
    case FilterOp::eq: return v == lo;
    case FilterOp::ne: return v != lo;
    case FilterOp::lt: return v < lo;
    case FilterOp::le: return v <= lo;
    case FilterOp::gt: return v > lo;
    case FilterOp::ge: return v >= lo;
    case FilterOp::in_range: return lo <= v && v <= hi;
  }
  return false;
}

}  // namespace

std::string_view to_string(FilterOp op) {
  switch (op) {
    case FilterOp::eq: return "=";
    case FilterOp::ne: return "!=";
    case FilterOp::lt: return "<";
    case FilterOp::le: return "<=";
    case FilterOp::gt: return ">";
    case FilterOp::ge: return ">=";
    case FilterOp::in_range: return "in";
  }
  return "=";
}

int judgment_rank(const std::optional<FairnessJudgment>& judgment) {
  if (!judgment) return 0;
  switch (judgment->verdict) {
    case JudgmentVerdict::fair: return 1;
    case JudgmentVerdict::unfair: return 2;
    case JudgmentVerdict::cleared: return judgment->needs_human ? 3 : 0;
  }
  return 0;
}

std::string judgment_label(const std::optional<FairnessJudgment>& judgment) {
  static constexpr const char* kLabels[] = {"", "fair", "unfair", "needs_human"};
  return kLabels[judgment_rank(judgment)];
}

std::vector<Predicate> parse_filter(std::string_view filter, std::span<const AttributeSpec> attributes) {
  std::vector<Predicate> out;
  std::size_t start = 0;
  while (start <= filter.size()) {
    auto end = filter.find(';', start);
    if (end == std::string_view::npos) end = filter.size();
    const std::string clause = csv::trim(filter.substr(start, end - start));
    start = end + 1;
    if (clause.empty()) continue;

    Predicate p;
    std::string value;
    if (const auto in = clause.find(" in "); in != std::string::npos) {
      p.field = csv::trim(std::string_view(clause).substr(0, in));
      p.op = FilterOp::in_range;
      value = csv::trim(std::string_view(clause).substr(in + 4));
    } else {
      const auto pos = clause.find_first_of("=!<>");
      if (pos == std::string::npos) throw ValidationError("filter", "no operator in '" + clause + "'");
      p.field = csv::trim(std::string_view(clause).substr(0, pos));
      std::string op(1, clause[pos]);
      if (pos + 1 < clause.size() && clause[pos + 1] == '=') op += '=';
      if (op == "=") p.op = FilterOp::eq;
      else if (op == "!=") p.op = FilterOp::ne;
      else if (op == "<") p.op = FilterOp::lt;
      else if (op == "<=") p.op = FilterOp::le;
      else if (op == ">") p.op = FilterOp::gt;
      else if (op == ">=") p.op = FilterOp::ge;
      else throw ValidationError("filter", "unknown operator '" + op + "'");
      value = csv::trim(std::string_view(clause).substr(pos + op.size()));
    }
    if (p.field.empty()) throw ValidationError("filter", "missing field in '" + clause + "'");
    if (!is_pseudo_field(p.field) && !find_attribute(attributes, p.field))
      throw ValidationError("filter", "unknown field '" + p.field + "'");

    if (p.op == FilterOp::in_range) {
      const auto dots = value.find("..");
      if (dots == std::string::npos) throw ValidationError("filter", "'in' expects lo..hi");
      p.text = csv::trim(std::string_view(value).substr(0, dots));
      p.upper_text = csv::trim(std::string_view(value).substr(dots + 2));
    } else {
      p.text = value;
    }
    if (p.field != "id") {
      p.number = encode_value(p.field, p.text, attributes);
      if (p.op == FilterOp::in_range) p.upper = encode_value(p.field, p.upper_text, attributes);
    }
    out.push_back(std::move(p));
  }
  return out;
}

bool matches(const Predicate& predicate, const ListRow& row, std::span<const AttributeSpec>) {
  if (predicate.field == "id")
    return compare<std::string>(predicate.op, row.application->id, predicate.text, predicate.upper_text);
  return compare<double>(predicate.op, row_value(predicate.field, row), predicate.number, predicate.upper);
}

SortSpec parse_sort(std::string_view key, std::string_view order, std::span<const AttributeSpec> attributes) {
  SortSpec s;
  if (!key.empty()) {
    if (!is_pseudo_field(key) && !find_attribute(attributes, key))
      throw ValidationError("sort", "cannot sort by '" + std::string(key) + "'");
    s.key = key;
  }
  if (order.empty() || order == "asc") s.descending = false;
  else if (order == "desc") s.descending = true;
  else throw ValidationError("order", "must be asc or desc");
  return s;
}

std::vector<ListRow> filter_and_sort(std::span<const ListRow> rows, std::span<const Predicate> predicates,
                                     const SortSpec& sort, std::span<const AttributeSpec> attributes) {
  std::vector<ListRow> out;
  for (const auto& row : rows)
    if (std::all_of(predicates.begin(), predicates.end(), [&](const auto& p) { return matches(p, row, attributes); }))
      out.push_back(row);
  auto by_id = [](const ListRow& a, const ListRow& b) { return a.application->id < b.application->id; };
  if (sort.key == "id") {
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return sort.descending ? by_id(b, a) : by_id(a, b); });
    return out;
  }
  std::sort(out.begin(), out.end(), [&](const ListRow& a, const ListRow& b) {
    const double va = row_value(sort.key, a), vb = row_value(sort.key, b);
    if (va != vb) return sort.descending ? va > vb : va < vb;
    return by_id(a, b);
  });
  return out;
}

}  // namespace loanfair
