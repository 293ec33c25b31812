#include "loanfair/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "loanfair/error.hpp"

namespace loanfair {

double CriticalityVector::utility() const {
  double u = intercept;
  for (const auto& e : entries) u += e.criticality;
  return u;
}

std::vector<std::size_t> CriticalityVector::order_by_weight() const {
  std::vector<std::size_t> idx(entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto l, auto r) { return entries[l].weight > entries[r].weight; });
  return idx;
}

CriticalityVector criticality(const ScoringModel& model, const Application& app) {
  const auto x = model.encode(app);
  CriticalityVector out;
  out.intercept = model.intercept();
  out.entries.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double w = model.weights()[k];
    out.entries.push_back({model.attributes()[k].name, w, x[k], w * x[k]});
  }
  return out;
}

std::vector<AttributeImportance> importance(const ScoringModel& model) {
  const double top = model.max_abs_weight();
  std::vector<AttributeImportance> out;
  for (std::size_t k = 0; k < model.size(); ++k) {
    const double w = model.weights()[k];
    out.push_back({model.attributes()[k].name, w, std::abs(w), top > 0.0 ? std::abs(w) / top : 0.0});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.importance > r.importance; });
  return out;
}

namespace {

std::string range_label(double lo, double hi, bool closed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%g, %g%c", lo, hi, closed ? ']' : ')');
  return buf;
}

}  // namespace

ValueDistribution value_distribution(const AttributeSpec& attribute, std::span<const Application> apps,
                                     std::span<const Prediction> preds) {
  if (apps.empty()) throw ContractError("value distributions need at least one application");
  if (apps.size() != preds.size()) throw ContractError("predictions are not aligned with applications");

  ValueDistribution dist;
  dist.attribute = attribute.name;
  std::vector<double> values;
  values.reserve(apps.size());
  for (std::size_t i = 0; i < apps.size(); ++i) {
    if (preds[i].application_id != apps[i].id) throw ContractError("predictions are not aligned with applications");
    values.push_back(apps[i].value(attribute.name));
  }

  std::vector<std::size_t> bin_of(values.size(), 0);
  if (attribute.is_categorical()) {
    for (std::size_t c = 0; c < attribute.categories.size(); ++c)
      dist.bins.push_back({static_cast<double>(c), static_cast<double>(c), attribute.categories[c]});
    for (std::size_t i = 0; i < values.size(); ++i) bin_of[i] = static_cast<std::size_t>(values[i]);
  } else {
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) {
      dist.degenerate = true;
      dist.bins.push_back({lo, hi, range_label(lo, hi, true)});
    } else {
      const double width = (hi - lo) / static_cast<double>(kValueBins);
      for (std::size_t b = 0; b < kValueBins; ++b) {
        const double lower = lo + width * static_cast<double>(b);
        const double upper = b + 1 == kValueBins ? hi : lo + width * static_cast<double>(b + 1);
        dist.bins.push_back({lower, upper, range_label(lower, upper, b + 1 == kValueBins)});
      }
      for (std::size_t i = 0; i < values.size(); ++i) {
        std::size_t b = kValueBins - 1;
        for (std::size_t j = 0; j + 1 < kValueBins; ++j) {
          if (values[i] < dist.bins[j].upper) {
            b = j;
            break;
          }
        }
        bin_of[i] = b;
      }
    }
  }

  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& bin = dist.bins[bin_of[i]];
    (preds[i].decision == Decision::accepted ? bin.accepted : bin.rejected) += 1;
  }
  const double total = static_cast<double>(values.size());
  for (auto& bin : dist.bins) {
    bin.accepted_pct = 100.0 * static_cast<double>(bin.accepted) / total;
    bin.rejected_pct = 100.0 * static_cast<double>(bin.rejected) / total;
  }
  return dist;
}

std::vector<ValueDistribution> value_distributions(const ScoringModel& model, std::span<const Application> apps,
                                                   std::span<const Prediction> preds) {
  std::vector<ValueDistribution> out;
  out.reserve(model.size());
  for (const auto& a : model.attributes()) out.push_back(value_distribution(a, apps, preds));
  return out;
}

std::vector<double> attribute_similarities(const Application& a, const Application& b,
                                           std::span<const AttributeSpec> specs,
                                           std::span<const FeatureScaling> ranges) {
  if (specs.size() != ranges.size()) throw ContractError("similarity needs one range per attribute");
  std::vector<double> s(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const double x = a.value(specs[k].name);
    const double y = b.value(specs[k].name);
    if (specs[k].is_categorical()) {
      s[k] = x == y ? 1.0 : 0.0;
    } else {
      s[k] = 1.0 - std::abs(ranges[k].encode(x) - ranges[k].encode(y));
    }
  }
  return s;
}

double similarity(const Application& a, const Application& b, std::span<const AttributeSpec> specs,
                  std::span<const FeatureScaling> ranges) {
  if (specs.empty()) throw ContractError("similarity over an empty attribute list");
  const auto s = attribute_similarities(a, b, specs, ranges);
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

double similarity(const ScoringModel& model, const Application& a, const Application& b) {
  return similarity(a, b, model.attributes(), model.scaling());
}

std::vector<SimilarApplication> similar_applications(const ScoringModel& model, const Application& target,
                                                     std::span<const Application> pool, double lo, double hi) {
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw ContractError("similarity range must satisfy 0 <= lo <= hi <= 1");
  std::vector<SimilarApplication> out;
  out.reserve(pool.size());
  for (const auto& app : pool) {
    if (app.id == target.id) continue;
    const double s = similarity(model, target, app);
    const auto p = predict(model, app);
    out.push_back({app.id, s, p.confidence, p.decision, s >= lo && s <= hi});
  }
  return out;
}

}  // namespace loanfair
