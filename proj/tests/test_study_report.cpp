#include <random>

#include "doctest.h"
#include "loanfair/cohort.hpp"
#include "loanfair/study_report.hpp"
#include "support.hpp"

using namespace loanfair;
using namespace loanfair::testing;

namespace {

const GroupSpec kNationality{"nationality", "foreign", {}};

FairnessJudgment judge(std::string s, std::string a, JudgmentVerdict v, Timestamp t) {
  return {std::move(s), std::move(a), v, false, t};
}

struct Cohort {
  std::vector<SessionCountry> countries;
  std::vector<FairnessJudgment> judgments;
  std::vector<std::string> ids;
};

// 200 sessions over the bundled countries. UA-High sessions mark about
// twice as many applications unfair.
Cohort planted_ua(const CultureTable& table, const std::array<double, 6>& means, std::uint64_t seed) {
  std::vector<std::string> high, low;
  for (const auto& [country, s] : table.resolved_scores())
    (level_for(s[Dimension::ua], means[static_cast<std::size_t>(Dimension::ua)]) == Level::high ? high : low)
        .push_back(country);
  std::mt19937_64 rng(seed);
  Cohort c;
  for (std::size_t i = 0; i < 200; ++i) {
    const bool is_high = i % 2 == 0;
    const auto& pool = is_high ? high : low;
    const std::string id = "p" + std::to_string(i);
    c.ids.push_back(id);
    c.countries.push_back({id, pool[rng() % pool.size()], "", "", ""});
    std::poisson_distribution<int> unfair(is_high ? 12.0 : 6.0), fair(25.0);
    int app = 0;
    for (int k = unfair(rng); k > 0; --k) c.judgments.push_back(judge(id, "A" + std::to_string(app++), JudgmentVerdict::unfair, app));
    for (int k = fair(rng); k > 0; --k) c.judgments.push_back(judge(id, "A" + std::to_string(app++), JudgmentVerdict::fair, app));
  }
  return c;
}

}  // namespace

TEST_CASE("session metrics use the latest judgment per application") {
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<FairnessJudgment> js = {
      judge("a", "1", JudgmentVerdict::unfair, 1), judge("a", "1", JudgmentVerdict::fair, 2),
      judge("a", "2", JudgmentVerdict::unfair, 3), judge("a", "3", JudgmentVerdict::unfair, 4),
      judge("a", "3", JudgmentVerdict::cleared, 5), judge("b", "1", JudgmentVerdict::unfair, 1),
      {"c", "1", JudgmentVerdict::cleared, true, 1}};
  const auto m = session_metrics(ids, js);
  REQUIRE(m.size() == 3);
  CHECK(m[0].judged_fair == 1);
  CHECK(m[0].judged_unfair == 1);
  CHECK(m[0].unfairness_ratio == 0.5);
  CHECK(m[1].unfairness_ratio == 1.0);
  CHECK_FALSE(m[2].unfairness_ratio.has_value());
}

TEST_CASE("summaries use the sample standard deviation") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const auto s = summarize(v);
  CHECK(s.n == 8);
  CHECK(s.mean == 5.0);
  CHECK(std::abs(s.sd - std::sqrt(32.0 / 7.0)) <= 1e-12);
  CHECK(summarize(std::vector<double>{3.0}).sd == 0.0);
  CHECK(summarize(std::vector<double>{}) == MetricSummary{});
}

TEST_CASE("an empty session set gives zeroed tables and no tests") {
  const auto& table = CultureTable::load_bundled();
  const auto groups = assign_groups({}, table, dimension_means(table));
  const auto r = study_report({}, groups);
  CHECK(r.sessions == 0);
  REQUIRE(r.tables.size() == 6);
  for (const auto& t : r.tables) {
    CHECK(t.judged_unfair.low.n == 0);
    CHECK_FALSE(t.judged_unfair.test.has_value());
    CHECK_FALSE(t.unfairness_ratio.significant);
  }
  CHECK_FALSE(r.between_groups_unfair.has_value());
  CHECK_FALSE(r.rating_vs_ratio.has_value());
  CHECK(group_labels().size() == 12);
  CHECK(group_labels().front() == "PD-L");
}

TEST_CASE("a planted UA effect is flagged in a 200-session cohort") {
  const auto& table = CultureTable::load_bundled();
  const auto means = dimension_means(table);
  const auto c = planted_ua(table, means, 7);
  const auto groups = assign_groups(c.countries, table, means);
  const auto metrics = session_metrics(c.ids, c.judgments);
  const auto r = study_report(metrics, groups);
  CHECK(r.sessions == 200);
  const auto& ua = r.tables[static_cast<std::size_t>(Dimension::ua)];
  CHECK(ua.dimension == Dimension::ua);
  CHECK(ua.judged_unfair.low.n + ua.judged_unfair.high.n == 200);
  REQUIRE(ua.judged_unfair.test.has_value());
  CHECK(ua.judged_unfair.test->p_value < 0.05);
  CHECK(ua.judged_unfair.significant);
  CHECK(ua.judged_unfair.high.mean > ua.judged_unfair.low.mean);
  REQUIRE(ua.unfairness_ratio.test.has_value());
  CHECK(ua.unfairness_ratio.test->p_value < 0.05);
  // Fair counts carry no planted difference.
  CHECK(ua.judged_fair.high.mean == doctest::Approx(ua.judged_fair.low.mean).epsilon(0.1));
  CHECK(render_text(r).find("UA") != std::string::npos);
}

TEST_CASE("rating correlation uses sessions with a rating and a ratio") {
  std::vector<SessionMetrics> m;
  for (int i = 0; i < 20; ++i) {
    SessionMetrics s;
    s.session_id = "s" + std::to_string(i);
    s.judged_unfair = static_cast<std::size_t>(i);
    s.judged_fair = 20;
    s.unfairness_ratio = static_cast<double>(i) / (20.0 + i);
    if (i % 4 != 0) s.post_rating = 7 - i / 3;
    m.push_back(s);
  }
  const auto r = study_report(m, GroupAssignment{});
  REQUIRE(r.rating_vs_ratio.has_value());
  CHECK(r.rating_vs_ratio->group_sizes == std::vector<std::size_t>{15});
  CHECK(r.rating_vs_ratio->statistic < -0.9);
}

TEST_CASE("impact block and report round-trip through JSON") {
  const auto& table = CultureTable::load_bundled();
  const auto means = dimension_means(table);
  const auto c = planted_ua(table, means, 9);
  const auto groups = assign_groups(c.countries, table, means);

  const Dataset clean = prune_attributes(generate_synthetic(400, 3), kDefaultMaxMissingRate);
  const ScoringModel m = train(clean);
  const auto& apps = clean.applications();
  CohortSpec spec;
  spec.session_prefix = "p";
  spec.cohort_size = 4;
  auto suggestions = simulate_cohort(spec, m, apps);
  for (auto& s : suggestions) s.session_id = "p" + std::to_string(std::stoi(s.session_id.substr(2)) - 1);
  const auto impact = impact_by_group(groups, suggestions, m, apps, kNationality);
  CHECK(impact.original == audit(m, apps, kNationality));
  CHECK(impact.groups.size() == 12);
  CHECK(impact.all_feedback.disparate_impact > impact.original.disparate_impact);
  std::size_t counted = 0;
  for (const auto& g : impact.groups)
    if (g.dimension == Dimension::pd) counted += g.suggestions;
  CHECK(counted == suggestions.size());

  const auto r = study_report(session_metrics(c.ids, c.judgments), groups, impact);
  const auto text = to_json(r).dump();
  const auto back = study_report_from_json(nlohmann::json::parse(text));
  CHECK(back == r);
  CHECK(to_json(back).dump() == text);
}
