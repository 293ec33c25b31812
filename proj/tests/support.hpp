#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "loanfair/dataset.hpp"
#include "loanfair/model.hpp"

namespace loanfair::testing {

// Fresh, empty directory under the build tree.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path(LOANFAIR_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline AttributeSpec continuous_attr(std::string name) {
  AttributeSpec a;
  a.name = std::move(name);
  a.kind = AttributeKind::continuous;
  return a;
}

inline AttributeSpec categorical_attr(std::string name, std::vector<std::string> categories) {
  AttributeSpec a;
  a.name = std::move(name);
  a.kind = categories.size() == 2 ? AttributeKind::binary : AttributeKind::categorical;
  a.categories = std::move(categories);
  return a;
}

// Three attributes: income in [0, 100], nationality {citizen, foreign}, tenure in [0, 10].
inline std::vector<AttributeSpec> toy_attributes() {
  return {continuous_attr("income"), categorical_attr("nationality", {"citizen", "foreign"}),
          continuous_attr("tenure")};
}

inline ScoringModel toy_model(std::vector<double> weights = {2.0, -1.5, 0.5}, double intercept = -0.5) {
  return ScoringModel(toy_attributes(), std::move(weights), intercept, {{0, 100}, {0, 1}, {0, 10}});
}

inline Application toy_app(std::string id, double income, double nationality, double tenure) {
  Application a;
  a.id = std::move(id);
  a.values = {{"income", income}, {"nationality", nationality}, {"tenure", tenure}};
  return a;
}

// n applications with values drawn uniformly from the toy ranges.
inline std::vector<Application> random_toy_apps(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Application> apps;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "T%03zu", i);
    apps.push_back(toy_app(id, std::round(u(rng) * 100.0), u(rng) < 0.4 ? 1.0 : 0.0, std::round(u(rng) * 10.0)));
  }
  return apps;
}

}  // namespace loanfair::testing
