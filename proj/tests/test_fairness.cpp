#include <map>
#include <random>

#include "doctest.h"
#include "loanfair/error.hpp"
#include "loanfair/fairness.hpp"
#include "support.hpp"

using namespace loanfair;
using namespace loanfair::testing;

namespace {

std::vector<GroupDecision> decisions(std::initializer_list<std::pair<const char*, int>> rows) {
  std::vector<GroupDecision> out;
  for (auto [g, d] : rows) out.push_back({g, d ? Decision::accepted : Decision::rejected});
  return out;
}

FairnessJudgment judge(std::string s, std::string a, JudgmentVerdict v, bool human = false, Timestamp t = 0) {
  return {std::move(s), std::move(a), v, human, t};
}

Prediction pred(Decision d) { return {"", d == Decision::accepted ? 0.9 : 0.1, d, 0.0}; }

const GroupSpec kNationality{"nationality", "foreign", {}};

}  // namespace

TEST_CASE("disparate impact on a hand-computed toy is 0.5") {
  const auto d = decisions({{"foreign", 1}, {"foreign", 0}, {"foreign", 1}, {"foreign", 0},
                            {"citizen", 1}, {"citizen", 1}, {"citizen", 1}, {"citizen", 1}});
  const auto r = disparate_impact(d, kNationality);
  CHECK(std::abs(r.disparate_impact - 0.5) <= 1e-9);
  CHECK(r.protected_accept_rate == 0.5);
  CHECK(r.reference_accept_rate == 1.0);
  CHECK(r.verdict == Verdict::unfair);
  CHECK(r.counts == GroupCounts{2, 2, 4, 0});
}

TEST_CASE("disparate impact of exactly 0.8 is fair and equal rates give 1") {
  // 4/5 against 5/5.
  const auto d = decisions({{"foreign", 1}, {"foreign", 1}, {"foreign", 1}, {"foreign", 1}, {"foreign", 0},
                            {"citizen", 1}, {"citizen", 1}, {"citizen", 1}, {"citizen", 1}, {"citizen", 1}});
  const auto r = disparate_impact(d, kNationality);
  CHECK(r.disparate_impact == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.verdict == Verdict::fair);
  const auto same = disparate_impact(decisions({{"foreign", 1}, {"foreign", 0}, {"citizen", 0}, {"citizen", 1}}),
                                     kNationality);
  CHECK(same.disparate_impact == 1.0);
  CHECK(same.verdict == Verdict::fair);
}

TEST_CASE("disparate impact matches brute force on random small instances") {
  std::mt19937_64 rng(3);
  const char* groups[] = {"foreign", "citizen", "dual"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GroupDecision> d;
    const std::size_t n = 4 + rng() % 17;
    for (std::size_t i = 0; i < n; ++i) d.push_back({groups[rng() % 3], rng() % 2 ? Decision::accepted : Decision::rejected});
    const GroupSpec g{"nationality", "foreign", {"citizen"}};
    double pa = 0, pn = 0, ra = 0, rn = 0;
    for (const auto& x : d) {
      if (x.group_value == std::string("foreign")) {
        pn += 1;
        pa += x.decision == Decision::accepted;
      } else if (x.group_value == std::string("citizen")) {
        rn += 1;
        ra += x.decision == Decision::accepted;
      }
    }
    if (pn == 0 || rn == 0) {
      CHECK_THROWS_AS(disparate_impact(d, g), ContractError);
    } else if (ra == 0) {
      CHECK_THROWS_AS(disparate_impact(d, g), UndefinedRatioError);
    } else {
      CHECK(std::abs(disparate_impact(d, g).disparate_impact - (pa / pn) / (ra / rn)) <= 1e-9);
    }
  }
}

TEST_CASE("group specs are validated against the attribute") {
  const auto attr = categorical_attr("nationality", {"citizen", "foreign"});
  CHECK_NOTHROW(validate(kNationality, attr));
  CHECK_THROWS_AS(validate(GroupSpec{"nationality", "martian", {}}, attr), ValidationError);
  CHECK_THROWS_AS(validate(GroupSpec{"nationality", "foreign", {"foreign"}}, attr), ValidationError);
  CHECK_THROWS_AS(validate(GroupSpec{"nationality", "foreign", {}}, continuous_attr("nationality")), ValidationError);
}

TEST_CASE("audit predicts then measures the group attribute") {
  const ScoringModel m = toy_model();
  const auto apps = random_toy_apps(60, 12);
  const auto r = audit(m, apps, kNationality);
  std::size_t counts[2][2] = {};
  for (const auto& a : apps)
    ++counts[static_cast<int>(a.value("nationality"))][predict(m, a).decision == Decision::accepted];
  CHECK(r.counts.protected_accepted == counts[1][1]);
  CHECK(r.counts.reference_rejected == counts[0][0]);
}

TEST_CASE("balanced accuracy on a hand-computed toy is 0.6") {
  // TPR 3/5, TNR 3/5.
  const Decision A = Decision::accepted, R = Decision::rejected;
  const std::vector<Decision> truth = {A, A, A, A, A, R, R, R, R, R};
  const std::vector<Decision> guess = {A, A, A, R, R, R, R, R, A, A};
  std::vector<Prediction> preds;
  for (auto g : guess) preds.push_back(pred(g));
  CHECK(std::abs(balanced_accuracy(preds, truth) - 0.6) <= 1e-9);
  CHECK_THROWS_AS(balanced_accuracy(std::span<const Prediction>(preds).first(3), truth), ContractError);
  const std::vector<Decision> one_class(10, A);
  CHECK_THROWS_AS(balanced_accuracy(preds, one_class), ContractError);
}

TEST_CASE("balanced accuracy matches the confusion-matrix formula on random instances") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Prediction> preds;
    std::vector<Decision> truth;
    for (int i = 0; i < 20; ++i) {
      preds.push_back(pred(rng() % 2 ? Decision::accepted : Decision::rejected));
      truth.push_back(i % 2 ? Decision::accepted : Decision::rejected);
    }
    double hit[2] = {0, 0};
    for (int i = 0; i < 20; ++i) hit[i % 2] += preds[i].decision == truth[i];
    CHECK(std::abs(balanced_accuracy(preds, truth) - 0.5 * (hit[0] / 10 + hit[1] / 10)) <= 1e-9);
  }
}

TEST_CASE("supersession keeps the latest judgment and drops cleared entries") {
  const std::vector<FairnessJudgment> js = {
      judge("s1", "a", JudgmentVerdict::fair),    judge("s1", "b", JudgmentVerdict::unfair),
      judge("s1", "a", JudgmentVerdict::cleared), judge("s2", "a", JudgmentVerdict::unfair),
      judge("s1", "c", JudgmentVerdict::cleared, true)};
  const auto eff = effective_judgments(js);
  REQUIRE(eff.size() == 3);
  CHECK(eff[0].application_id == "b");
  CHECK(eff[1].session_id == "s2");
  CHECK(eff[2].needs_human);
}

TEST_CASE("unfairness ratio ignores needs-human and is undefined without verdicts") {
  const std::vector<FairnessJudgment> js = {
      judge("s", "a", JudgmentVerdict::fair), judge("s", "b", JudgmentVerdict::unfair),
      judge("s", "c", JudgmentVerdict::unfair), judge("s", "d", JudgmentVerdict::cleared, true)};
  CHECK(std::abs(unfairness_ratio(js) - 2.0 / 3.0) <= 1e-9);
  CHECK_THROWS_AS(unfairness_ratio(std::span<const FairnessJudgment>(js).subspan(3)), UndefinedRatioError);
}

TEST_CASE("mean unfairness ratio averages per session after supersession") {
  const std::vector<FairnessJudgment> js = {
      judge("s1", "a", JudgmentVerdict::unfair), judge("s1", "a", JudgmentVerdict::fair),
      judge("s1", "b", JudgmentVerdict::unfair), judge("s2", "a", JudgmentVerdict::unfair),
      judge("s3", "a", JudgmentVerdict::cleared, true)};
  // s1: 1/2, s2: 1, s3 skipped.
  CHECK(std::abs(mean_unfairness_ratio(js) - 0.75) <= 1e-9);
}

TEST_CASE("overview counts follow the latest markup per application") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Prediction> preds;
    for (int i = 0; i < 12; ++i) preds.push_back(pred(rng() % 3 ? Decision::accepted : Decision::rejected));
    std::vector<FairnessJudgment> js;
    for (int e = 0; e < 20; ++e)
      js.push_back(judge("s", "A" + std::to_string(rng() % 12), static_cast<JudgmentVerdict>(rng() % 3), rng() % 4 == 0));
    std::map<std::string, FairnessJudgment> last;
    for (const auto& j : js) last[j.application_id] = j;
    OverviewCounts ref;
    for (const auto& p : preds) (p.decision == Decision::accepted ? ref.accepted : ref.rejected) += 1;
    for (const auto& [id, j] : last) {
      ref.judged_fair += j.verdict == JudgmentVerdict::fair;
      ref.judged_unfair += j.verdict == JudgmentVerdict::unfair;
      ref.needs_human += j.needs_human;
    }
    CHECK(overview_counts(preds, js) == ref);
  }
}

TEST_CASE("fairness reports round-trip through JSON and render") {
  const auto r = disparate_impact(decisions({{"foreign", 1}, {"foreign", 0}, {"citizen", 1}}), kNationality);
  CHECK(fairness_report_from_json(to_json(r)) == r);
  const std::string text = render_text(r, kNationality);
  CHECK(text.find("unfair") != std::string::npos);
  CHECK(text.find("0.5000") != std::string::npos);
  CHECK(parse_judgment_verdict("fair") == JudgmentVerdict::fair);
  CHECK_THROWS_AS(parse_judgment_verdict("meh"), ValidationError);
}
