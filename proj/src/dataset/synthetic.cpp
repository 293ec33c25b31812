#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <boost/math/distributions/normal.hpp>


#include "loanfair/dataset.hpp"
#include "loanfair/error.hpp"

namespace loanfair {

namespace {

constexpr const char* kApplicant = "applicant-provided";
constexpr const char* kBank = "bank records";
constexpr const char* kBureau = "third-party credit bureau";
constexpr const char* kDerived = "derived from loan terms";

AttributeSpec continuous(std::string name, std::string provenance, bool sensitive = false) {
  return {std::move(name), AttributeKind::continuous, {}, std::move(provenance), sensitive};
}

AttributeSpec categorical(std::string name, std::vector<std::string> categories, std::string provenance,
                          bool sensitive = false) {
  const auto kind = categories.size() == 2 ? AttributeKind::binary : AttributeKind::categorical;
  return {std::move(name), kind, std::move(categories), std::move(provenance), sensitive};
}

double round_to(double v, double step) { return std::round(v / step) * step; }

// Marks exactly round(rate * n) rows of `attribute` missing.
void blank_out(std::vector<Application>& apps, const std::string& attribute, double rate, std::mt19937_64& rng) {
  std::vector<std::size_t> rows(apps.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(apps.size())));
  for (std::size_t i = 0; i < count; ++i) apps[rows[i]].values[attribute] = std::nullopt;
}

}  // namespace

Schema synthetic_schema() {
  Schema s;
  s.id_column = "id";
  s.label_name = "decision";
  s.attributes = {
      categorical("nationality", {"citizen", "foreign"}, kApplicant, true),
      categorical("gender", {"female", "male"}, kApplicant, true),
      continuous("age", kApplicant, true),
      categorical("marital_status", {"single", "married", "divorced", "widowed"}, kApplicant),
      continuous("number_of_dependents", kApplicant),
      categorical("residence_status", {"owner", "tenant", "with_parents"}, kApplicant),
      categorical("region", {"north", "south", "east", "west", "central"}, kApplicant),
      categorical("employment_status", {"employed", "self_employed", "unemployed", "retired"}, kApplicant),
      continuous("monthly_income", kApplicant),
      continuous("number_of_earners", kApplicant),
      categorical("income_contributor", {"applicant_only", "shared", "partner_main"}, kApplicant),
      continuous("savings_balance", kBank),
      continuous("credit_score", kBank),
      categorical("credit_risk_level", {"very_low", "low", "medium", "high", "very_high"}, kBureau),
      continuous("existing_loans", kBureau),
      continuous("years_of_business_with_bank", kBank),
      categorical("has_joint_mortgage", {"no", "yes"}, kBank),
      categorical("insurance", {"no", "yes"}, kApplicant),
      categorical("purpose_of_loan", {"car", "home_improvement", "education", "debt_consolidation", "other"},
                  kApplicant),
      categorical("type_of_loan", {"personal", "secured", "revolving"}, kApplicant),
      continuous("loan_amount", kApplicant),
      continuous("loan_duration", kApplicant),
      continuous("annual_interest", kBank),
      continuous("monthly_payments", kDerived),
      continuous("maximum_monthly_payment", kApplicant),
      categorical("money_laundering_check", {"passed", "review"}, kBank),
      continuous("employer_rating", kBureau),
      continuous("previous_address_years", kApplicant),
      continuous("secondary_income", kApplicant),
      continuous("guarantor_income", kApplicant),
  };
  return s;
}

Dataset generate_synthetic(std::size_t n, std::uint64_t seed, double bias_strength) {
  if (n < 100) throw ContractError("synthetic datasets need at least 100 applications");
  if (!std::isfinite(bias_strength)) throw ContractError("bias_strength must be finite");

  const Schema schema = synthetic_schema();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](std::initializer_list<double> weights) {
    std::discrete_distribution<int> d(weights);
    return static_cast<double>(d(rng));
  };

  // Exactly 40% foreign applicants, placed at random rows.
  std::vector<bool> foreign(n, false);
  {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_foreign = static_cast<std::size_t>(std::llround(0.4 * static_cast<double>(n)));
    for (std::size_t i = 0; i < n_foreign; ++i) foreign[rows[i]] = true;
  }

  // Latent repayment capacity, stratified within each nationality group so
  // both groups cover the same quantiles of N(0, 1).
  std::vector<double> capacities(n);
  {
    const boost::math::normal_distribution<double> standard;
    for (const bool group : {false, true}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (foreign[i] == group) members.push_back(i);
      std::shuffle(members.begin(), members.end(), rng);
      const auto size = static_cast<double>(members.size());
      for (std::size_t j = 0; j < members.size(); ++j) {
        const double u = (static_cast<double>(j) + unit(rng)) / size;
        capacities[members[j]] = boost::math::quantile(standard, std::clamp(u, 1e-12, 1.0 - 1e-12));
      }
    }
  }

  std::vector<Application> apps;
  apps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "A%05zu", i + 1);
    Application app;
    app.id = id;
    auto& v = app.values;

    // Observed only through noisy proxies.
    const double capacity = capacities[i];

    v["nationality"] = foreign[i] ? 1.0 : 0.0;
    v["gender"] = unit(rng) < 0.45 ? 0.0 : 1.0;
    const double age = std::clamp(std::round(41.0 + 11.0 * normal(rng)), 19.0, 75.0);
    v["age"] = age;
    const double married = pick({0.38, 0.45, 0.13, 0.04});
    v["marital_status"] = married;
    v["number_of_dependents"] = std::min(4.0, std::floor(std::abs(normal(rng)) * (married == 1.0 ? 1.6 : 0.8)));
    const double residence = age < 26 ? pick({0.15, 0.45, 0.40}) : pick({0.55, 0.40, 0.05});
    v["residence_status"] = residence;
    v["region"] = pick({0.2, 0.2, 0.2, 0.2, 0.2});
    const double employment = age >= 65 ? pick({0.15, 0.10, 0.05, 0.70}) : pick({0.72, 0.18, 0.10, 0.0});
    v["employment_status"] = employment;

    double income = std::exp(8.0 + 0.30 * capacity + 0.25 * normal(rng));
    if (employment == 2.0) income *= 0.45;
    if (employment == 3.0) income *= 0.7;
    v["monthly_income"] = round_to(income, 0.01);
    const double earners = 1.0 + (unit(rng) < 0.3 ? 1.0 : 0.0) + (unit(rng) < 0.12 ? 1.0 : 0.0);
    v["number_of_earners"] = earners;
    v["income_contributor"] = earners == 1.0 ? 0.0 : (unit(rng) < 0.7 ? 1.0 : 2.0);
    v["savings_balance"] = round_to(std::exp(8.3 + 0.55 * capacity + 0.8 * normal(rng)), 1.0);
    v["credit_score"] = std::clamp(std::round(640.0 + 85.0 * capacity + 45.0 * normal(rng)), 300.0, 999.0);
    const double risk_latent = -0.9 * capacity + 0.55 * normal(rng);
    const double risk = risk_latent < -1.2 ? 0.0 : risk_latent < -0.4 ? 1.0 : risk_latent < 0.4 ? 2.0
                      : risk_latent < 1.2  ? 3.0 : 4.0;
    v["credit_risk_level"] = risk;
    const double lambda = std::clamp(0.8 - 0.35 * capacity, 0.05, 3.0);
    v["existing_loans"] = static_cast<double>(std::min(5, std::poisson_distribution<int>(lambda)(rng)));
    v["years_of_business_with_bank"] = std::floor(unit(rng) * std::min(age - 18.0, 35.0));
    v["has_joint_mortgage"] = (married == 1.0 && residence == 0.0) ? (unit(rng) < 0.6 ? 1.0 : 0.0)
                                                                   : (unit(rng) < 0.08 ? 1.0 : 0.0);
    const double insured = unit(rng) < 0.55 ? 1.0 : 0.0;
    v["insurance"] = insured;
    const double purpose = pick({0.30, 0.25, 0.10, 0.25, 0.10});
    v["purpose_of_loan"] = purpose;
    const double type = pick({0.55, 0.25, 0.20});
    v["type_of_loan"] = type;
    const double amount =
        round_to(std::exp(9.3 + (purpose == 1.0 ? 0.4 : 0.0) + (type == 1.0 ? 0.3 : 0.0) + 0.45 * normal(rng)), 100.0);
    v["loan_amount"] = amount;
    static constexpr double kDurations[] = {12, 24, 36, 48, 60, 72, 84};
    const double months = kDurations[std::uniform_int_distribution<int>(0, 6)(rng)];
    v["loan_duration"] = months;
    const double interest =
        round_to(std::clamp(4.0 + 1.4 * risk - (type == 1.0 ? 1.0 : 0.0) + 0.7 * normal(rng), 1.5, 19.9), 0.01);
    v["annual_interest"] = interest;
    const double r = interest / 1200.0;
    const double payment = round_to(amount * r / (1.0 - std::pow(1.0 + r, -months)), 0.01);
    v["monthly_payments"] = payment;
    const double max_payment = round_to(std::max(50.0, 0.35 * income * earners * (1.0 + 0.15 * normal(rng))), 0.01);
    v["maximum_monthly_payment"] = max_payment;
    const double laundering_review = unit(rng) < 0.03 ? 1.0 : 0.0;
    v["money_laundering_check"] = laundering_review;
    v["employer_rating"] = round_to(std::clamp(3.0 + 0.5 * capacity + 0.8 * normal(rng), 1.0, 5.0), 0.1);
    v["previous_address_years"] = std::floor(unit(rng) * 20.0);
    v["secondary_income"] = round_to(std::max(0.0, 400.0 * normal(rng) + 600.0), 0.01);
    v["guarantor_income"] = round_to(std::exp(7.8 + 0.4 * normal(rng)), 0.01);

    // Lending decision: affordability and credit history, with a penalty
    // against foreign applicants of size bias_strength.
    const double affordability = std::log(max_payment / std::max(payment, 1.0));
    double score = 0.9 * capacity + 0.8 * affordability - 0.35 * (v["existing_loans"].value() - 0.8) +
                   0.3 * insured + 0.015 * v["years_of_business_with_bank"].value() - 1.0 * laundering_review -
                   0.25 * (risk - 2.0) + 0.6 * normal(rng) + 0.4;
    if (foreign[i]) score -= bias_strength;
    app.label = score > 0.0 ? Decision::accepted : Decision::rejected;
    apps.push_back(std::move(app));
  }

  // Heavily missing attributes (pruned by the 10% rule) and lightly missing
  // ones (kept and imputed).
  blank_out(apps, "employer_rating", 0.13, rng);
  blank_out(apps, "previous_address_years", 0.22, rng);
  blank_out(apps, "secondary_income", 0.38, rng);
  blank_out(apps, "guarantor_income", 0.57, rng);
  blank_out(apps, "monthly_income", 0.02, rng);
  blank_out(apps, "credit_score", 0.04, rng);
  blank_out(apps, "years_of_business_with_bank", 0.03, rng);
  blank_out(apps, "savings_balance", 0.06, rng);
  blank_out(apps, "marital_status", 0.01, rng);

  return Dataset(schema.attributes, std::move(apps), schema.label_name);
}

}  // namespace loanfair
