#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "loanfair/error.hpp"
#include "loanfair/explain.hpp"
#include "support.hpp"

using namespace loanfair;
using namespace loanfair::testing;

TEST_CASE("criticality is weight times scaled value and sums to the utility") {
  const ScoringModel m = toy_model();
  for (const auto& app : random_toy_apps(20, 3)) {
    const auto c = criticality(m, app);
    REQUIRE(c.entries.size() == 3);
    const double x[3] = {app.value("income") / 100.0, app.value("nationality"), app.value("tenure") / 10.0};
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(c.entries[k].value == doctest::Approx(x[k]).epsilon(1e-12));
      CHECK(std::abs(c.entries[k].criticality - m.weights()[k] * x[k]) <= 1e-9);
    }
    CHECK(std::abs(c.utility() - predict(m, app).utility) <= 1e-12);
  }
}

TEST_CASE("criticality order follows weights descending, ties in attribute order") {
  const ScoringModel m = toy_model({0.5, 2.0, 0.5});
  const auto order = criticality(m, toy_app("a", 1, 0, 1)).order_by_weight();
  CHECK(order == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("importance is |w| sorted descending with relative share") {
  const auto imp = importance(toy_model({1.0, -4.0, 2.0}));
  REQUIRE(imp.size() == 3);
  CHECK(imp[0].attribute == "nationality");
  CHECK(imp[0].importance == 4.0);
  CHECK(imp[0].weight == -4.0);
  CHECK(imp[1].relative == 0.5);
  CHECK(imp[2].relative == 0.25);
  const auto zero = importance(toy_model({0, 0, 0}));
  for (const auto& e : zero) CHECK(e.relative == 0.0);
}

TEST_CASE("continuous value distributions use five equal-width bins") {
  const ScoringModel m = toy_model();
  std::vector<Application> apps;
  for (int v : {0, 19, 20, 39, 40, 59, 60, 79, 80, 100}) apps.push_back(toy_app("a" + std::to_string(v), v, 0, 0));
  const auto preds = predict_all(m, apps);
  const auto d = value_distribution(m.attributes()[0], apps, preds);
  REQUIRE(d.bins.size() == kValueBins);
  for (const auto& b : d.bins) CHECK(b.accepted + b.rejected == 2);
  CHECK(d.bins[0].lower == 0.0);
  CHECK(d.bins[4].upper == 100.0);
  CHECK(d.bins[4].label == "[80, 100]");
  CHECK(d.bins[0].label == "[0, 20)");
  double pct = 0;
  for (const auto& b : d.bins) pct += b.accepted_pct + b.rejected_pct;
  CHECK(pct == doctest::Approx(100.0));
}

TEST_CASE("categorical distributions have one bin per category and constant ones collapse") {
  const ScoringModel m = toy_model();
  const auto apps = random_toy_apps(30, 8);
  const auto preds = predict_all(m, apps);
  const auto d = value_distribution(m.attributes()[1], apps, preds);
  REQUIRE(d.bins.size() == 2);
  CHECK(d.bins[1].label == "foreign");
  std::size_t foreign = 0;
  for (const auto& a : apps) foreign += a.value("nationality") == 1.0;
  CHECK(d.bins[1].accepted + d.bins[1].rejected == foreign);

  std::vector<Application> same(4, toy_app("x", 5, 0, 5));
  for (std::size_t i = 0; i < same.size(); ++i) same[i].id = "x" + std::to_string(i);
  const auto flat = value_distribution(m.attributes()[0], same, predict_all(m, same));
  CHECK(flat.degenerate);
  CHECK(flat.bins.size() == 1);
  CHECK_THROWS_AS(value_distribution(m.attributes()[0], apps, std::span<const Prediction>(preds).first(3)),
                  ContractError);
}

TEST_CASE("similarity of 26 attributes differing in one endpoint is 25/26") {
  std::vector<AttributeSpec> specs;
  std::vector<FeatureScaling> ranges;
  Application a{"a", {}, std::nullopt}, b{"b", {}, std::nullopt};
  for (int k = 0; k < 26; ++k) {
    const std::string name = "x" + std::to_string(k);
    if (k % 3 == 0) {
      specs.push_back(categorical_attr(name, {"p", "q", "r"}));
      ranges.push_back({0, 2});
    } else {
      specs.push_back(continuous_attr(name));
      ranges.push_back({-5, 5});
    }
    a.values[name] = b.values[name] = 1.0;
  }
  a.values["x1"] = -5.0;
  b.values["x1"] = 5.0;
  CHECK(std::abs(similarity(a, b, specs, ranges) - 25.0 / 26.0) <= 1e-12);
  const auto per = attribute_similarities(a, b, specs, ranges);
  CHECK(per[1] == 0.0);
  CHECK(std::count(per.begin(), per.end(), 1.0) == 25);
}

TEST_CASE("similarity is symmetric, bounded and 1 on itself") {
  const ScoringModel m = toy_model();
  const auto apps = random_toy_apps(15, 4);
  for (const auto& a : apps)
    for (const auto& b : apps) {
      const double s = similarity(m, a, b);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      CHECK(s == similarity(m, b, a));
      // Brute force: mean over attributes of the per-attribute rule.
      const double ref = ((1.0 - std::abs(a.value("income") - b.value("income")) / 100.0) +
                          (a.value("nationality") == b.value("nationality") ? 1.0 : 0.0) +
                          (1.0 - std::abs(a.value("tenure") - b.value("tenure")) / 10.0)) /
                         3.0;
      CHECK(std::abs(s - ref) <= 1e-9);
    }
  CHECK(similarity(m, apps[0], apps[0]) == 1.0);
}

TEST_CASE("similar applications exclude the target and flag the range") {
  const ScoringModel m = toy_model();
  const auto apps = random_toy_apps(25, 2);
  const auto out = similar_applications(m, apps[0], apps, 0.6, 0.9);
  CHECK(out.size() == apps.size() - 1);
  for (const auto& s : out) {
    CHECK(s.application_id != apps[0].id);
    CHECK(s.selectable == (s.similarity >= 0.6 && s.similarity <= 0.9));
  }
  CHECK_THROWS_AS(similar_applications(m, apps[0], apps, 0.7, 0.6), ContractError);
  CHECK_THROWS_AS(similar_applications(m, apps[0], apps, -0.1, 0.6), ContractError);
}
