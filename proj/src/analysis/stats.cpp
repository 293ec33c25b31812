#include "loanfair/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "loanfair/error.hpp"

namespace loanfair {

namespace {

// Sum over tie groups of t^3 - t.
double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    total += t * t * t - t;
    i = j;
  }
  return total;
}

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::vector<long long> doubled_ranks(std::span<const double> values) {
  const auto r = midranks(values);
  std::vector<long long> d(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) d[i] = std::llround(2.0 * r[i]);
  return d;
}

void check_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) throw ContractError("samples must be finite");
}

// z of U against its null mean, with the tie-corrected variance.
double mann_whitney_z(double u, std::size_t nx, std::size_t ny, double ties) {
  const double n = static_cast<double>(nx + ny);
  const double variance =
      static_cast<double>(nx) * static_cast<double>(ny) / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (!(variance > 0.0)) return 0.0;
  return (u - static_cast<double>(nx) * static_cast<double>(ny) / 2.0) / std::sqrt(variance);
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, const StatsOptions& options) {
  if (x.empty() || y.empty()) throw ContractError("Mann-Whitney U needs two nonempty samples");
  check_finite(x);
  check_finite(y);
  const std::size_t nx = x.size(), ny = y.size(), n = nx + ny;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto d = doubled_ranks(pooled);
  const long long sx = std::accumulate(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(nx), 0LL);

  TestResult r;
  r.group_sizes = {nx, ny};
  r.statistic = static_cast<double>(sx) / 2.0 - static_cast<double>(nx * (nx + 1)) / 2.0;

  if (n <= options.exact_max_total) {
    // ways[k][s]: subsets of size k whose doubled rank sum is s.
    const long long max_sum = std::accumulate(d.begin(), d.end(), 0LL);
    std::vector<std::vector<double>> ways(nx + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = std::min(i + 1, nx); k >= 1; --k)
        for (long long s = max_sum; s >= d[i]; --s)
          ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - d[i])];
    const long long mean = static_cast<long long>(nx * (n + 1));
    const long long observed = std::llabs(sx - mean);
    double extreme = 0.0, total = 0.0;
    for (long long s = 0; s <= max_sum; ++s) {
      const double w = ways[nx][static_cast<std::size_t>(s)];
      total += w;
      if (std::llabs(s - mean) >= observed) extreme += w;
    }
    r.p_value = std::min(1.0, extreme / total);
    r.method = "exact";
  } else {
    const double z = mann_whitney_z(r.statistic, nx, ny, tie_term(pooled));
    r.p_value = std::min(1.0, normal_two_sided(z));
    r.method = "normal";
  }
  return r;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups, const StatsOptions& options) {
  if (groups.size() < 2) throw ContractError("Kruskal-Wallis needs at least two groups");
  std::vector<double> pooled;
  std::vector<std::size_t> sizes;
  for (const auto& g : groups) {
    if (g.empty()) throw ContractError("Kruskal-Wallis groups must be nonempty");
    check_finite(g);
    pooled.insert(pooled.end(), g.begin(), g.end());
    sizes.push_back(g.size());
  }
  const std::size_t k = groups.size();
  const std::size_t n = pooled.size();
  const auto d = doubled_ranks(pooled);

  // H = (12 / (n (n + 1))) * sum R_i^2 / n_i - 3 (n + 1), over the tie correction.
  // With doubled rank sums S_i and L = lcm(n_i), T = sum S_i^2 * (L / n_i)
  // is an exact integer that orders assignments the same way as H.
  long long lcm = 1;
  for (auto s : sizes) lcm = std::lcm(lcm, static_cast<long long>(s));
  std::vector<long long> sums(k, 0);
  {
    std::size_t offset = 0;
    for (std::size_t g = 0; g < k; ++g)
      for (std::size_t i = 0; i < sizes[g]; ++i) sums[g] += d[offset++];
  }
  auto t_of = [&](const std::vector<long long>& s) {
    long long t = 0;
    for (std::size_t g = 0; g < k; ++g) t += s[g] * s[g] * (lcm / static_cast<long long>(sizes[g]));
    return t;
  };
  const long long t_obs = t_of(sums);
  const double nn = static_cast<double>(n);
  const double correction = 1.0 - tie_term(pooled) / (nn * nn * nn - nn);

  TestResult r;
  r.group_sizes = sizes;
  if (!(correction > 0.0)) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.method = "exact";
    return r;
  }
  const double sum_sq = static_cast<double>(t_obs) / (4.0 * static_cast<double>(lcm));
  r.statistic = std::max(0.0, (12.0 / (nn * (nn + 1.0)) * sum_sq - 3.0 * (nn + 1.0)) / correction);

  double assignments = 1.0;
  {
    double remaining = nn;
    for (auto s : sizes)
      for (std::size_t i = 0; i < s; ++i) assignments *= remaining-- / static_cast<double>(i + 1);
  }
  const bool small_groups =
      std::all_of(sizes.begin(), sizes.end(), [&](auto s) { return s <= options.exact_max_group; });
  if (small_groups && assignments <= static_cast<double>(options.exact_max_assignments)) {
    std::vector<std::size_t> room = sizes;
    std::vector<long long> partial(k, 0);
    double extreme = 0.0, total = 0.0;
    std::function<void(std::size_t)> walk = [&](std::size_t i) {
      if (i == n) {
        total += 1.0;
        if (t_of(partial) >= t_obs) extreme += 1.0;
        return;
      }
      for (std::size_t g = 0; g < k; ++g) {
        if (room[g] == 0) continue;
        --room[g];
        partial[g] += d[i];
        walk(i + 1);
        partial[g] -= d[i];
        ++room[g];
      }
    };
    walk(0);
    r.p_value = std::min(1.0, extreme / total);
    r.method = "exact";
  } else {
    const boost::math::chi_squared_distribution<double> chi(static_cast<double>(k - 1));
    r.p_value = std::clamp(boost::math::cdf(boost::math::complement(chi, r.statistic)), 0.0, 1.0);
    r.method = "chi-squared";
  }
  return r;
}

TestResult pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("Pearson r needs samples of equal length");
  if (x.size() < 3) throw ContractError("Pearson r needs at least three pairs");
  check_finite(x);
  check_finite(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ContractError("Pearson r is undefined for a constant sample");

  TestResult res;
  res.group_sizes = {x.size()};
  res.method = "t";
  res.statistic = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double one_minus = 1.0 - res.statistic * res.statistic;
  if (!(one_minus > 0.0)) {
    res.p_value = 0.0;
    return res;
  }
  const double t = res.statistic * std::sqrt((n - 2.0) / one_minus);
  const boost::math::students_t_distribution<double> dist(n - 2.0);
  res.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  return res;
}

namespace {

// Returns NaN when the quadrature misses its tolerance.
double studentized_range_sf_checked(double q, std::size_t k) {
  if (k < 2) throw ContractError("the studentized range needs at least two groups");
  if (!(q > 0.0)) return 1.0;
  const double kk = static_cast<double>(k);
  const auto integrand = [&](double z) {
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double inner = 0.5 * (std::erfc(-z / std::sqrt(2.0)) - std::erfc(-(z - q) / std::sqrt(2.0)));
    return kk * phi * std::pow(std::max(inner, 0.0), kk - 1.0);
  };
  double error = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double cdf = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -inf, inf, 15, 1e-12,
                                                                                   &error);
  if (!std::isfinite(cdf) || error > 1e-8) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

}  // namespace

double studentized_range_sf(double q, std::size_t k) {
  const double p = studentized_range_sf_checked(q, k);
  if (std::isnan(p)) throw Error("numerical_error", "studentized range integral did not converge");
  return p;
}

SteelDwassResult steel_dwass(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ContractError("Steel-Dwass needs at least two groups");
  for (const auto& g : groups) {
    if (g.empty()) throw ContractError("Steel-Dwass groups must be nonempty");
    check_finite(g);
  }
  const std::size_t k = groups.size();
  const double pairs = static_cast<double>(k * (k - 1) / 2);
  SteelDwassResult out;
  out.adjustment = "steel-dwass";
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      StatsOptions normal_only;
      normal_only.exact_max_total = 0;
      const auto mw = mann_whitney_u(groups[a], groups[b], normal_only);
      std::vector<double> pooled(groups[a]);
      pooled.insert(pooled.end(), groups[b].begin(), groups[b].end());
      PairwiseComparison c;
      c.first = a;
      c.second = b;
      c.u = mw.statistic;
      c.z = mann_whitney_z(mw.statistic, groups[a].size(), groups[b].size(), tie_term(pooled));
      c.p_value = studentized_range_sf_checked(std::sqrt(2.0) * std::abs(c.z), k);
      out.comparisons.push_back(c);
    }
  }
  const bool failed =
      std::any_of(out.comparisons.begin(), out.comparisons.end(), [](const auto& c) { return std::isnan(c.p_value); });
  if (failed) {
    out.adjustment = "bonferroni";
    for (auto& c : out.comparisons) c.p_value = std::min(1.0, pairs * normal_two_sided(c.z));
  }
  return out;
}

nlohmann::json to_json(const TestResult& result) {
  return {{"statistic", result.statistic},
          {"p_value", result.p_value},
          {"group_sizes", result.group_sizes},
          {"method", result.method}};
}

TestResult test_result_from_json(const nlohmann::json& doc) {
  TestResult r;
  r.statistic = doc.at("statistic").get<double>();
  r.p_value = doc.at("p_value").get<double>();
  r.group_sizes = doc.at("group_sizes").get<std::vector<std::size_t>>();
  r.method = doc.at("method").get<std::string>();
  return r;
}

}  // namespace loanfair
