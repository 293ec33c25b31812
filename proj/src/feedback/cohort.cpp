#include "loanfair/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "loanfair/csv.hpp"
#include "loanfair/error.hpp"
#include "loanfair/keyvalue.hpp"

namespace loanfair {

namespace {

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ValidationError(key, "'" + text + "' is not a number");
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError(key, "'" + text + "' is not a non-negative integer");
  return v;
}

}  // namespace

std::string_view to_string(CohortDirection direction) {
  switch (direction) {
    case CohortDirection::toward_zero: return "toward_zero";
    case CohortDirection::amplify: return "amplify";
    case CohortDirection::set: return "set";
  }
  return "set";
}

std::string_view to_string(CohortSelection selection) {
  switch (selection) {
    case CohortSelection::rejected_protected: return "rejected_protected";
    case CohortSelection::accepted_protected: return "accepted_protected";
    case CohortSelection::protected_group: return "protected";
    case CohortSelection::all: return "all";
  }
  return "all";
}

CohortSpec parse_cohort_spec(std::istream& in) {
  CohortSpec spec;
  for (const auto& [key, value] : parse_key_values(in)) {
    if (key == "attribute") {
      spec.attribute = value;
    } else if (key == "direction") {
      if (value == "toward_zero") spec.direction = CohortDirection::toward_zero;
      else if (value == "amplify") spec.direction = CohortDirection::amplify;
      else if (value == "set") spec.direction = CohortDirection::set;
      else throw ValidationError(key, "must be toward_zero, amplify or set");
    } else if (key == "magnitude") {
      spec.magnitude = parse_real(key, value);
    } else if (key == "fraction") {
      spec.fraction = parse_real(key, value);
      if (spec.fraction < 0.0 || spec.fraction > 1.0) throw ValidationError(key, "must lie in [0, 1]");
    } else if (key == "select") {
      if (value == "rejected_protected") spec.select = CohortSelection::rejected_protected;
      else if (value == "accepted_protected") spec.select = CohortSelection::accepted_protected;
      else if (value == "protected") spec.select = CohortSelection::protected_group;
      else if (value == "all") spec.select = CohortSelection::all;
      else throw ValidationError(key, "must be rejected_protected, accepted_protected, protected or all");
    } else if (key == "group_attribute") {
      spec.group_attribute = value;
    } else if (key == "protected_value" || key == "protected") {
      spec.protected_value = value;
    } else if (key == "cohort_size") {
      spec.cohort_size = parse_count(key, value);
    } else if (key == "seed") {
      spec.seed = parse_count(key, value);
    } else if (key == "countries") {
      spec.countries.clear();
      for (const auto& c : csv::split_record(value)) {
        auto name = csv::trim(c);
        if (!name.empty()) spec.countries.push_back(std::move(name));
      }
    } else if (key == "session_prefix") {
      if (value.empty()) throw ValidationError(key, "must not be empty");
      spec.session_prefix = value;
    } else {
      throw ValidationError(key, "unknown cohort setting");
    }
  }
  return spec;
}

CohortSpec load_cohort_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open cohort spec " + path.string());
  return parse_cohort_spec(in);
}

nlohmann::json to_json(const CohortSpec& spec) {
  return {{"attribute", spec.attribute},
          {"direction", to_string(spec.direction)},
          {"magnitude", spec.magnitude},
          {"fraction", spec.fraction},
          {"select", to_string(spec.select)},
          {"group_attribute", spec.group_attribute},
          {"protected_value", spec.protected_value},
          {"cohort_size", spec.cohort_size},
          {"seed", spec.seed},
          {"countries", spec.countries},
          {"session_prefix", spec.session_prefix}};
}

std::string cohort_session_id(const CohortSpec& spec, std::size_t user) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "-%04zu", user + 1);
  return spec.session_prefix + buf;
}

std::vector<WeightSuggestion> simulate_cohort(const CohortSpec& spec, const ScoringModel& model,
                                              std::span<const Application> apps) {
  const double original = model.weight(spec.attribute);
  const auto& group_attr = model.attributes()[model.index_of(spec.group_attribute)];
  if (!group_attr.is_categorical())
    throw ValidationError("group_attribute", "'" + spec.group_attribute + "' is not categorical");
  const auto protected_index = group_attr.category_index(spec.protected_value);
  if (!protected_index)
    throw ValidationError("protected_value", "'" + spec.protected_value + "' is not a category of '" +
                                                 spec.group_attribute + "'");

  double target = original;
  switch (spec.direction) {
    case CohortDirection::toward_zero: target = original * (1.0 - spec.magnitude); break;
    case CohortDirection::amplify: target = original * (1.0 + spec.magnitude); break;
    case CohortDirection::set: target = spec.magnitude; break;
  }
  const double bound = slider_bound(model);
  target = std::clamp(target, -bound, bound);

  std::vector<const Application*> eligible;
  for (const auto& app : apps) {
    const bool is_protected = app.value(spec.group_attribute) == static_cast<double>(*protected_index);
    const bool accepted = predict(model, app).decision == Decision::accepted;
    bool take = false;
    switch (spec.select) {
      case CohortSelection::rejected_protected: take = is_protected && !accepted; break;
      case CohortSelection::accepted_protected: take = is_protected && accepted; break;
      case CohortSelection::protected_group: take = is_protected; break;
      case CohortSelection::all: take = true; break;
    }
    if (take) eligible.push_back(&app);
  }

  std::vector<WeightSuggestion> out;
  for (std::size_t user = 0; user < spec.cohort_size; ++user) {
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(user), static_cast<std::uint32_t>(user >> 32)};
    std::mt19937_64 rng(seq);
    const std::string session = cohort_session_id(spec, user);
    Timestamp clock = static_cast<Timestamp>(user) * 1'000'000;
    for (const auto* app : eligible) {
      // 53-bit uniform in [0, 1), independent of the standard library.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u >= spec.fraction) continue;
      out.push_back({session, app->id, {{spec.attribute, target}}, ++clock});
    }
  }
  return out;
}

std::vector<EventRecord> cohort_events(const CohortSpec& spec, std::span<const WeightSuggestion> suggestions) {
  std::vector<EventRecord> events;
  for (std::size_t user = 0; user < spec.cohort_size; ++user) {
    EventRecord e;
    e.type = event_type::kSession;
    e.session_id = cohort_session_id(spec, user);
    e.timestamp = static_cast<Timestamp>(user) * 1'000'000;
    if (!spec.countries.empty()) e.payload["country"] = spec.countries[user % spec.countries.size()];
    events.push_back(std::move(e));
  }
  for (const auto& s : suggestions) events.push_back(to_event(s));
  return events;
}

}  // namespace loanfair
