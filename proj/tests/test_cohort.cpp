#include <sstream>

#include "doctest.h"
#include "loanfair/cohort.hpp"
#include "loanfair/error.hpp"
#include "support.hpp"

using namespace loanfair;
using namespace loanfair::testing;

namespace {

const GroupSpec kNationality{"nationality", "foreign", {}};

struct Planted {
  Dataset data;
  ScoringModel model;
};

const Planted& planted() {
  static const Planted p = [] {
    Dataset d = prune_attributes(generate_synthetic(1000, 1), kDefaultMaxMissingRate);
    ScoringModel m = train(d);
    return Planted{std::move(d), std::move(m)};
  }();
  return p;
}

FairnessDelta run(const CohortSpec& spec) {
  const auto& p = planted();
  const auto& apps = p.data.applications();
  const auto suggestions = simulate_cohort(spec, p.model, apps);
  return fairness_delta(aggregate(suggestions, p.model, apps), p.model, apps, kNationality);
}

}  // namespace

TEST_CASE("cohort spec parses every key") {
  std::istringstream in(
      "# corrective\n"
      "attribute = nationality\ndirection = amplify\nmagnitude = 0.5\nfraction = 0.25\n"
      "select = protected\ngroup_attribute = nationality\nprotected_value = foreign\n"
      "cohort_size = 7\nseed = 99\ncountries = Germany, Japan\nsession_prefix = adv\n");
  const auto s = parse_cohort_spec(in);
  CHECK(s.direction == CohortDirection::amplify);
  CHECK(s.magnitude == 0.5);
  CHECK(s.fraction == 0.25);
  CHECK(s.select == CohortSelection::protected_group);
  CHECK(s.cohort_size == 7);
  CHECK(s.seed == 99);
  CHECK(s.countries == std::vector<std::string>{"Germany", "Japan"});
  CHECK(cohort_session_id(s, 0) == "adv-0001");
  CHECK(to_json(s)["select"] == "protected");
}

TEST_CASE("cohort spec errors name the key") {
  auto field_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_cohort_spec(in);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of("fraction = 1.5\n") == "fraction");
  CHECK(field_of("magnitude = lots\n") == "magnitude");
  CHECK(field_of("direction = sideways\n") == "direction");
  CHECK(field_of("cohort_size = -1\n") == "cohort_size");
  CHECK(field_of("colour = red\n") == "colour");
}

TEST_CASE("simulated suggestions follow the cohort settings") {
  const ScoringModel m = toy_model();
  const auto apps = random_toy_apps(80, 5);
  CohortSpec spec;
  spec.cohort_size = 4;
  spec.fraction = 0.5;
  const auto out = simulate_cohort(spec, m, apps);
  REQUIRE_FALSE(out.empty());
  std::map<std::string, const Application*> by_id;
  for (const auto& a : apps) by_id[a.id] = &a;
  for (const auto& s : out) {
    const auto& app = *by_id.at(s.application_id);
    CHECK(app.value("nationality") == 1.0);
    CHECK(predict(m, app).decision == Decision::rejected);
    CHECK(s.weights == std::map<std::string, double>{{"nationality", 0.0}});
  }

  spec.direction = CohortDirection::amplify;
  spec.magnitude = 10.0;
  for (const auto& s : simulate_cohort(spec, m, apps)) CHECK(s.weights.at("nationality") == -slider_bound(m));

  spec.select = CohortSelection::all;
  spec.fraction = 1.0;
  CHECK(simulate_cohort(spec, m, apps).size() == 4 * apps.size());
  spec.fraction = 0.0;
  CHECK(simulate_cohort(spec, m, apps).empty());
}

TEST_CASE("a larger cohort only adds suggestions") {
  const ScoringModel m = toy_model();
  const auto apps = random_toy_apps(80, 6);
  CohortSpec spec;
  spec.fraction = 0.3;
  spec.select = CohortSelection::all;
  spec.cohort_size = 3;
  const auto small = simulate_cohort(spec, m, apps);
  spec.cohort_size = 6;
  const auto large = simulate_cohort(spec, m, apps);
  REQUIRE(large.size() >= small.size());
  CHECK(std::equal(small.begin(), small.end(), large.begin()));
  CHECK(simulate_cohort(spec, m, apps) == large);
}

TEST_CASE("cohort events open one session per user") {
  CohortSpec spec;
  spec.cohort_size = 3;
  spec.countries = {"Germany", "Japan"};
  const std::vector<WeightSuggestion> s = {{"sim-0002", "A", {{"nationality", 0.0}}, 5}};
  const auto events = cohort_events(spec, s);
  REQUIRE(events.size() == 4);
  CHECK(events[0].type == event_type::kSession);
  CHECK(events[2].payload["country"] == "Germany");
  CHECK(events[1].payload["country"] == "Japan");
  CHECK(events[3] == to_event(s[0]));
}

TEST_CASE("corrective cohort raises DI past the four-fifths line") {
  CohortSpec spec;
  spec.cohort_size = 10;
  const auto d = run(spec);
  CHECK(d.before.disparate_impact < 0.8);
  CHECK(d.after.disparate_impact > d.before.disparate_impact);
  CHECK(d.after.disparate_impact >= 0.8);
  CHECK(d.after.verdict == Verdict::fair);
}

TEST_CASE("corrective DI is nondecreasing in cohort size") {
  CohortSpec spec;
  spec.fraction = 0.2;
  double last = run([&] { auto s = spec; s.cohort_size = 0; return s; }()).after.disparate_impact;
  bool crossed = false;
  for (std::size_t n : {1, 2, 4, 8, 16, 32}) {
    spec.cohort_size = n;
    const double di = run(spec).after.disparate_impact;
    CHECK(di >= last);
    last = di;
    crossed = crossed || di >= 0.8;
  }
  CHECK(crossed);
}

TEST_CASE("adversarial cohort lowers DI") {
  CohortSpec spec;
  spec.direction = CohortDirection::amplify;
  spec.magnitude = 1.0;
  spec.select = CohortSelection::accepted_protected;
  const auto d = run(spec);
  CHECK(d.after.disparate_impact < d.before.disparate_impact);
}
