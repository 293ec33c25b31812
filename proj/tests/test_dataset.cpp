#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "loanfair/dataset.hpp"
#include "loanfair/error.hpp"
#include "support.hpp"

using namespace loanfair;
using namespace loanfair::testing;

namespace {

Schema toy_schema() { return Schema{"id", "decision", toy_attributes()}; }

const char* kToyCsv =
    "id,income,nationality,tenure,decision\n"
    "a,10,citizen,1,accepted\n"
    "b,,foreign,3,rejected\n"
    "c,30,foreign,,accepted\n"
    "d,40,,4,rejected\n"
    "e,50,citizen,5,\n";

}  // namespace

TEST_CASE("attribute specs enforce kind and category invariants") {
  CHECK_NOTHROW(validate(categorical_attr("g", {"a", "b", "c"})));
  CHECK_THROWS_AS(validate(categorical_attr("g", {"a"})), SchemaError);
  AttributeSpec bin = categorical_attr("g", {"a", "b"});
  bin.categories.push_back("c");
  CHECK_THROWS_AS(validate(bin), SchemaError);
  AttributeSpec cont = continuous_attr("x");
  cont.categories = {"a"};
  CHECK_THROWS_AS(validate(cont), SchemaError);
  CHECK_THROWS_AS(validate(categorical_attr("g", {"a", "a", "b"})), SchemaError);
  CHECK(categorical_attr("g", {"a", "b", "c"}).category_index("c") == 2u);
  CHECK_FALSE(categorical_attr("g", {"a", "b", "c"}).category_index("z"));
}

TEST_CASE("csv reading maps labels to indices and blanks to missing") {
  std::istringstream in(kToyCsv);
  const Dataset ds = read_csv(in, toy_schema());
  REQUIRE(ds.size() == 5);
  CHECK(ds.find("a").value("nationality") == 0.0);
  CHECK(ds.find("b").value("nationality") == 1.0);
  CHECK_FALSE(ds.find("b").values.at("income").has_value());
  CHECK_THROWS_AS(ds.find("b").value("income"), ContractError);
  CHECK(ds.find("a").label == Decision::accepted);
  CHECK_FALSE(ds.find("e").label.has_value());
  CHECK(ds.missing_count("income") == 1);
  CHECK(ds.missing_rate("tenure") == doctest::Approx(0.2));
  CHECK(ds.find_if_present("zz") == nullptr);
  CHECK_THROWS_AS(ds.find("zz"), NotFoundError);
}

TEST_CASE("csv write then read reproduces the dataset") {
  std::istringstream in(kToyCsv);
  const Dataset ds = read_csv(in, toy_schema());
  std::ostringstream out;
  write_csv(ds, out);
  std::istringstream back(out.str());
  const Dataset again = read_csv(back, toy_schema());
  CHECK(again.applications() == ds.applications());
}

TEST_CASE("csv errors carry line numbers") {
  const auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_csv(in, Schema{"id", "decision", toy_attributes()});
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("id,income,nationality,tenure,decision\na,1,citizen,1,accepted\nb,x,citizen,1,accepted\n") == 3);
  CHECK(line_of("id,income,nationality,tenure,decision\na,1,martian,1,accepted\n") == 2);
  CHECK(line_of("id,income,nationality,tenure,decision\na,1,citizen\n") == 2);
  CHECK(line_of("id,income,nationality,tenure,decision\na,1,citizen,1,maybe\n") == 2);
  std::istringstream missing_col("id,income,tenure,decision\n");
  CHECK_THROWS_AS(read_csv(missing_col, toy_schema()), SchemaError);
  std::istringstream dup("id,income,nationality,tenure,decision\na,1,citizen,1,\na,2,citizen,1,\n");
  CHECK_THROWS_AS(read_csv(dup, toy_schema()), SchemaError);
}

TEST_CASE("schema files round-trip") {
  const auto dir = temp_dir("dataset_schema");
  const Schema s = synthetic_schema();
  save_schema(s, dir / "s.schema.json");
  CHECK(load_schema(dir / "s.schema.json") == s);
  CHECK(load_schema(dir / "s.schema.json").hash() == s.hash());
  Schema other = s;
  other.attributes[0].categories = {"a", "b"};
  CHECK(other.hash() != s.hash());
}

TEST_CASE("pruning drops attributes strictly above the threshold and imputes the rest") {
  std::istringstream in(
      "id,income,nationality,tenure,decision\n"
      "a,10,citizen,1,accepted\n"
      "b,,foreign,,rejected\n"
      "c,30,foreign,,accepted\n"
      "d,40,foreign,4,rejected\n"
      "e,50,,5,accepted\n");
  const Dataset ds = read_csv(in, toy_schema());
  // tenure: 2/5 missing, income and nationality: 1/5.
  const Dataset clean = prune_attributes(ds, 0.2);
  CHECK(clean.cleaning().pruned == std::vector<std::string>{"tenure"});
  CHECK(clean.attributes().size() == 2);
  // Median of {10, 30, 40, 50} is 35; the mode of {citizen, foreign x3} is foreign.
  CHECK(clean.find("b").value("income") == 35.0);
  CHECK(clean.find("e").value("nationality") == 1.0);
  CHECK(clean.cleaning().fill_values.at("income") == 35.0);
  CHECK(clean.cleaning().imputed_counts.at("nationality") == 1);
  for (const auto& a : clean.attributes()) CHECK(clean.missing_count(a.name) == 0);
  // Exactly at the threshold is kept.
  CHECK(prune_attributes(ds, 0.4).attributes().size() == 3);
  CHECK_THROWS_AS(prune_attributes(ds, 0.0), ContractError);
}

TEST_CASE("split sizes, disjointness, order and determinism") {
  const Dataset ds = generate_synthetic(1000, 3);
  const auto [train, test] = split(ds, 0.7, 11);
  CHECK(train.size() == 700);
  CHECK(test.size() == 300);
  std::set<std::string> ids;
  for (const auto& a : train.applications()) ids.insert(a.id);
  for (const auto& a : test.applications()) CHECK(ids.insert(a.id).second);
  CHECK(ids.size() == 1000);
  // Each part keeps the source order.
  const auto position = [&](const std::string& id) {
    const auto& apps = ds.applications();
    return std::find_if(apps.begin(), apps.end(), [&](const auto& a) { return a.id == id; }) - apps.begin();
  };
  for (std::size_t i = 1; i < test.size(); ++i)
    CHECK(position(test.applications()[i - 1].id) < position(test.applications()[i].id));
  const auto [train2, test2] = split(ds, 0.7, 11);
  CHECK(test2.applications() == test.applications());
  const auto [train3, test3] = split(ds, 0.7, 12);
  CHECK(test3.applications() != test.applications());
  CHECK_THROWS_AS(split(ds, 1.0, 1), ContractError);
}

TEST_CASE("synthetic generator shape") {
  const Dataset ds = generate_synthetic(1000, 5);
  CHECK(ds.size() == 1000);
  CHECK(ds.attributes().size() == 30);
  std::size_t heavy = 0;
  for (const auto& a : ds.attributes()) heavy += ds.missing_rate(a.name) > kDefaultMaxMissingRate;
  CHECK(heavy == 4);
  const Dataset clean = prune_attributes(ds, kDefaultMaxMissingRate);
  CHECK(clean.attributes().size() == 26);
  for (const auto& a : ds.applications()) CHECK(a.label.has_value());
  CHECK(ds.attribute("nationality").category_index("foreign").has_value());
  CHECK_THROWS_AS(generate_synthetic(99, 1), ContractError);
}

TEST_CASE("synthetic generator is deterministic in its arguments") {
  CHECK(generate_synthetic(200, 9).applications() == generate_synthetic(200, 9).applications());
  CHECK(generate_synthetic(200, 9).applications() != generate_synthetic(200, 10).applications());
  CHECK(generate_synthetic(200, 9, 0.0).applications() != generate_synthetic(200, 9, 1.3).applications());
}

TEST_CASE("planted bias lowers the foreign acceptance rate in the labels") {
  const auto foreign_gap = [](double bias) {
    double gap = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Dataset ds = generate_synthetic(1000, seed, bias);
      double acc[2] = {0, 0}, n[2] = {0, 0};
      for (const auto& a : ds.applications()) {
        const auto g = static_cast<std::size_t>(a.value("nationality"));
        n[g] += 1;
        acc[g] += *a.label == Decision::accepted;
      }
      gap += (acc[1] / n[1]) / (acc[0] / n[0]);
    }
    return gap / 5.0;
  };
  CHECK(foreign_gap(0.0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(foreign_gap(kDefaultBiasStrength) < 0.85);
}
