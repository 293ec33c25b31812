#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "loanfair/event_log.hpp"
#include "loanfair/feedback.hpp"

namespace loanfair {

/// How each simulated user rewrites the target weight.
enum class CohortDirection {
  toward_zero,  ///< w * (1 - magnitude)
  amplify,      ///< w * (1 + magnitude)
  set,          ///< magnitude
};

/// Which applications a simulated user may edit, judged on the original
/// model's decisions.
enum class CohortSelection { rejected_protected, accepted_protected, protected_group, all };

std::string_view to_string(CohortDirection direction);
std::string_view to_string(CohortSelection selection);

/// Declarative stand-in for a group of users suggesting weight changes.
struct CohortSpec {
  std::string attribute = "nationality";
  CohortDirection direction = CohortDirection::toward_zero;
  double magnitude = 1.0;
  /// Probability that a user edits any one eligible application.
  double fraction = 1.0;
  CohortSelection select = CohortSelection::rejected_protected;
  std::string group_attribute = "nationality";
  std::string protected_value = "foreign";
  std::size_t cohort_size = 10;
  std::uint64_t seed = 1;
  /// Optional countries assigned to the simulated sessions round-robin.
  std::vector<std::string> countries;
  std::string session_prefix = "sim";
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and bad
/// values raise ValidationError naming the key.
CohortSpec parse_cohort_spec(std::istream& in);
CohortSpec load_cohort_spec(const std::filesystem::path& path);
nlohmann::json to_json(const CohortSpec& spec);

/// Session ids are `<prefix>-0001`, `<prefix>-0002`, ...
std::string cohort_session_id(const CohortSpec& spec, std::size_t user);

/// One suggestion per (user, edited application). User i draws from its own
/// generator seeded by (seed, i), so a larger cohort only adds suggestions.
/// Suggested values are clamped to the slider bound.
std::vector<WeightSuggestion> simulate_cohort(const CohortSpec& spec, const ScoringModel& model,
                                              std::span<const Application> apps);

/// A `session` event per simulated user (with its country, if any) followed
/// by the suggestions as feedback events.
std::vector<EventRecord> cohort_events(const CohortSpec& spec, std::span<const WeightSuggestion> suggestions);

}  // namespace loanfair
