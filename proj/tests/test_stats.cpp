#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "doctest.h"
#include "loanfair/error.hpp"
#include "loanfair/stats.hpp"
#include "stats_oracles.hpp"

using namespace loanfair;
using namespace loanfair::testing;

namespace {

Sample draw(std::mt19937_64& rng, std::size_t n, int levels, double shift = 0.0) {
  Sample s;
  std::uniform_int_distribution<int> d(0, levels - 1);
  for (std::size_t i = 0; i < n; ++i) s.push_back(d(rng) + shift);
  return s;
}

}  // namespace

TEST_CASE("midranks share ties") {
  const Sample v{3, 1, 3, 2, 3};
  CHECK(midranks(v) == Sample{4, 1, 4, 2, 4});
}

TEST_CASE("Mann-Whitney basics") {
  const auto r = mann_whitney_u(Sample{1, 2}, Sample{3, 4});
  CHECK(r.statistic == 0.0);
  CHECK(r.method == "exact");
  CHECK(r.p_value == doctest::Approx(1.0 / 3.0));
  const Sample same{1, 2, 3, 4, 5};
  CHECK(mann_whitney_u(same, same).p_value >= 0.95);
  CHECK_THROWS_AS(mann_whitney_u(Sample{}, same), ContractError);
}

TEST_CASE("Mann-Whitney exact path matches enumeration for every size up to six") {
  std::mt19937_64 rng(11);
  for (std::size_t nx = 1; nx <= 6; ++nx)
    for (std::size_t ny = 1; ny <= 6; ++ny)
      for (int trial = 0; trial < 4; ++trial) {
        const auto x = draw(rng, nx, trial % 2 ? 4 : 1000);
        const auto y = draw(rng, ny, trial % 2 ? 4 : 1000, trial == 3 ? 1.0 : 0.0);
        const auto r = mann_whitney_u(x, y);
        CAPTURE(nx);
        CAPTURE(ny);
        CHECK(r.method == "exact");
        CHECK(r.statistic == pair_u(x, y));
        CHECK(std::abs(r.p_value - enumerate_mwu(x, y)) <= 1e-12);
        // Swapping the samples reflects U.
        const auto s = mann_whitney_u(y, x);
        CHECK(s.statistic == static_cast<double>(nx * ny) - r.statistic);
        CHECK(std::abs(s.p_value - r.p_value) <= 1e-12);
      }
}

TEST_CASE("Mann-Whitney normal path for larger samples") {
  std::mt19937_64 rng(12);
  const auto x = draw(rng, 30, 10), y = draw(rng, 25, 10, 2.0);
  const auto r = mann_whitney_u(x, y);
  CHECK(r.method == "normal");
  CHECK(r.statistic == pair_u(x, y));
  CHECK(r.p_value < 0.05);
  CHECK(r.p_value >= 0.0);
}

TEST_CASE("Kruskal-Wallis exact path matches enumeration for small groups") {
  std::mt19937_64 rng(13);
  const std::vector<std::vector<std::size_t>> designs = {{2, 2}, {3, 2}, {6, 6}, {1, 2, 3}, {3, 3, 3}, {2, 2, 2, 2}, {6, 1, 2}};
  for (const auto& sizes : designs)
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Sample> groups;
      for (std::size_t g = 0; g < sizes.size(); ++g)
        groups.push_back(draw(rng, sizes[g], trial == 0 ? 3 : 100, trial == 2 ? static_cast<double>(g) * 30 : 0.0));
      const auto r = kruskal_wallis(groups);
      CHECK(r.method == "exact");
      CHECK(std::abs(r.statistic - direct_h(groups)) <= 1e-9);
      CHECK(std::abs(r.p_value - enumerate_kw(groups)) <= 1e-12);
    }
}

TEST_CASE("Kruskal-Wallis formula and degenerate cases") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<Sample> groups{draw(rng, 10, 8), draw(rng, 10, 8), draw(rng, 10, 8, 1.0)};
    const auto r = kruskal_wallis(groups);
    CHECK(r.method == "chi-squared");
    CHECK(std::abs(r.statistic - direct_h(groups)) <= 1e-9);
  }
  const auto flat = kruskal_wallis({{2, 2, 2}, {2, 2}, {2}});
  CHECK(flat.statistic == 0.0);
  CHECK(flat.p_value == 1.0);
  CHECK_THROWS_AS(kruskal_wallis({{1, 2}}), ContractError);
  CHECK_THROWS_AS(kruskal_wallis({{1, 2}, {}}), ContractError);
}

TEST_CASE("two-group Kruskal-Wallis agrees with Mann-Whitney") {
  std::mt19937_64 rng(15);
  // Both exact (every group up to six) or both asymptotic (more than 20 values).
  for (int trial = 0; trial < 20; ++trial) {
    const bool small = trial < 10;
    const auto x = draw(rng, small ? 2 + trial % 5 : 11 + trial % 5, 20);
    const auto y = draw(rng, small ? 3 + trial % 4 : 12 + trial % 4, 20, trial % 3);
    const auto kw = kruskal_wallis({x, y});
    const auto mw = mann_whitney_u(x, y);
    CHECK(kw.method == (small ? "exact" : "chi-squared"));
    CHECK(std::abs(kw.p_value - mw.p_value) <= 0.02);
  }
}

TEST_CASE("rank tests ignore strictly monotone transforms") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = draw(rng, 5 + trial, 50), y = draw(rng, 7, 50, 5.0), z = draw(rng, 4, 50);
    auto f = [](Sample s) {
      for (auto& v : s) v = std::exp(v / 10.0) - 3.0;
      return s;
    };
    CHECK(mann_whitney_u(x, y) == mann_whitney_u(f(x), f(y)));
    const auto a = kruskal_wallis({x, y, z}), b = kruskal_wallis({f(x), f(y), f(z)});
    CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-12));
    CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));
  }
}

TEST_CASE("Pearson r against the covariance formula") {
  const Sample x{1.5, 2.0, 3.25, 4.0, 5.5, 6.0, 7.75, 8.0, 9.0, 10.5};
  const Sample y{2.1, 1.9, 3.7, 4.4, 4.1, 6.6, 7.0, 8.8, 8.1, 11.0};
  const double n = 10.0;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double oracle = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  const auto r = pearson_r(x, y);
  CHECK(std::abs(r.statistic - oracle) <= 1e-12);
  CHECK(r.p_value < 0.001);
  CHECK(pearson_r(x, x).statistic == 1.0);
  Sample neg(x);
  for (auto& v : neg) v = -v;
  CHECK(pearson_r(x, neg).statistic == -1.0);
  CHECK_THROWS_AS(pearson_r(x, Sample(10, 1.0)), ContractError);
  CHECK_THROWS_AS(pearson_r(Sample{1, 2}, Sample{1, 2}), ContractError);
  CHECK_THROWS_AS(pearson_r(x, Sample{1, 2, 3}), ContractError);
}

TEST_CASE("Pearson p matches a t reference value") {
  // r = 0.5 with n = 12 gives t = 1.8257 on 10 degrees of freedom, p = 0.0979.
  const Sample x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  Sample y(12);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise;
  for (auto& v : y) v = noise(rng);
  const auto r = pearson_r(x, y);
  const double t = r.statistic * std::sqrt(10.0 / (1.0 - r.statistic * r.statistic));
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value <= 1.0);
  CHECK((std::abs(t) > 2.228) == (r.p_value < 0.05));
}

TEST_CASE("studentized range tail against tabulated critical values") {
  // Two means: the range of two standard normals is sqrt(2) |N(0,1)|.
  for (double q : {0.5, 1.0, 2.0, 3.0}) CHECK(std::abs(studentized_range_sf(q, 2) - std::erfc(q / 2.0)) <= 1e-9);
  CHECK(std::abs(studentized_range_sf(2.772, 2) - 0.05) <= 2e-4);
  CHECK(std::abs(studentized_range_sf(3.314, 3) - 0.05) <= 2e-4);
  CHECK(std::abs(studentized_range_sf(3.633, 4) - 0.05) <= 2e-4);
  CHECK(std::abs(studentized_range_sf(3.858, 5) - 0.05) <= 2e-4);
  CHECK(std::abs(studentized_range_sf(4.603, 5) - 0.01) <= 1e-4);
  CHECK(studentized_range_sf(0.0, 3) == 1.0);
}

TEST_CASE("Steel-Dwass compares every pair") {
  std::mt19937_64 rng(17);
  const std::vector<Sample> groups{draw(rng, 15, 30), draw(rng, 12, 30), draw(rng, 18, 30, 25.0)};
  const auto sd = steel_dwass(groups);
  CHECK(sd.adjustment == "steel-dwass");
  REQUIRE(sd.comparisons.size() == 3);
  for (const auto& c : sd.comparisons) {
    CHECK(c.u == pair_u(groups[c.first], groups[c.second]));
    StatsOptions normal;
    normal.exact_max_total = 0;
    const double raw = mann_whitney_u(groups[c.first], groups[c.second], normal).p_value;
    CHECK(c.p_value >= raw);
    CHECK(c.p_value <= std::min(1.0, 3.0 * raw) + 1e-12);
  }
  CHECK(sd.comparisons[0].p_value > 0.05);
  CHECK(sd.comparisons[1].p_value < 0.05);
  CHECK(sd.comparisons[2].p_value < 0.05);

  // With two groups the adjustment is the identity.
  const auto two = steel_dwass({groups[0], groups[2]});
  StatsOptions normal;
  normal.exact_max_total = 0;
  CHECK(std::abs(two.comparisons[0].p_value - mann_whitney_u(groups[0], groups[2], normal).p_value) <= 1e-9);
}

TEST_CASE("test results round-trip through JSON") {
  const TestResult r{18786.5, 0.023, {120, 268}, "normal"};
  CHECK(test_result_from_json(nlohmann::json::parse(to_json(r).dump())) == r);
}
