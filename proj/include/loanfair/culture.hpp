#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "loanfair/feedback.hpp"

namespace loanfair {

enum class Dimension { pd, idv, msc, ua, lto, idg };
inline constexpr std::array<Dimension, 6> kDimensions{Dimension::pd,  Dimension::idv, Dimension::msc,
                                                      Dimension::ua,  Dimension::lto, Dimension::idg};

/// "PD", "IDV", ...
std::string_view to_string(Dimension dimension);
/// Case-insensitive inverse of to_string.
Dimension parse_dimension(std::string_view text);

enum class Level { low, high };
/// "L" or "H".
std::string_view to_string(Level level);

/// Six country scores on the 0-100 scale, all present.
struct CultureScores {
  std::string country;
  std::array<double, 6> values{};

  double operator[](Dimension d) const { return values[static_cast<std::size_t>(d)]; }
  friend bool operator==(const CultureScores&, const CultureScores&) = default;
};

/// One matrix row as published; absent scores stay empty.
struct CultureRow {
  std::string country;
  std::array<std::optional<double>, 6> values;
};

/// Country score matrix plus the neighbour list and name aliases used to
/// fill gaps. Read-only after construction.
class CultureTable {
 public:
  /// Missing scores in `matrix` are written as "#NULL!" or left empty.
  CultureTable(std::istream& matrix, std::istream& neighbors, std::istream& aliases);
  CultureTable(std::vector<CultureRow> rows, std::multimap<std::string, std::string> neighbors,
               std::map<std::string, std::string> aliases = {});

  static CultureTable load(const std::filesystem::path& matrix, const std::filesystem::path& neighbors,
                           const std::filesystem::path& aliases);
  /// The matrix shipped under data/culture.
  static CultureTable load_bundled();

  const std::vector<CultureRow>& rows() const noexcept { return rows_; }

  /// Matrix name for `name` (exact, then alias, then case-insensitive).
  std::optional<std::string> canonical(std::string_view name) const;

  /// Scores for a country. Each missing dimension is the mean of the
  /// neighbours' published scores; UnresolvedCountryError when a dimension
  /// stays empty or the country is unknown and has no neighbours.
  CultureScores resolve(std::string_view country) const;

  /// Every matrix country that resolve() can complete.
  std::map<std::string, CultureScores> resolved_scores() const;

 private:
  const CultureRow* find_row(const std::string& name) const;

  std::vector<CultureRow> rows_;
  std::multimap<std::string, std::string> neighbors_;
  std::map<std::string, std::string> aliases_;
};

/// Mean of the published scores per dimension over all matrix rows (gaps
/// are skipped, not filled). ContractError on an empty table.
std::array<double, 6> dimension_means(const CultureTable& table);
/// Means over fully resolved scores.
std::array<double, 6> dimension_means(std::span<const CultureScores> scores);

/// Country fields a session may carry, in resolution precedence.
struct SessionCountry {
  std::string session_id;
  std::string registered_residence;
  std::string registered_birth_country;
  std::string questionnaire_residence;
  std::string questionnaire_nationality;

  /// First non-empty field, or "" when none is set.
  std::string effective() const;
};

struct DimensionGrouping {
  Dimension dimension = Dimension::pd;
  double mean = 0.0;
  std::map<std::string, Level> assignment;

  std::vector<std::string> sessions(Level level) const;
};

struct GroupAssignment {
  std::vector<DimensionGrouping> groupings;
  /// Sessions left out of every grouping, with the reason.
  std::map<std::string, std::string> unresolved;
};

/// High when the country's score is strictly above the dimension mean.
Level level_for(double score, double mean);

GroupAssignment assign_groups(std::span<const SessionCountry> sessions, const CultureTable& table,
                              const std::array<double, 6>& means);

/// Suggestions aggregated separately for the High and Low sessions of one
/// dimension; each level's report is the DI of its adjusted decisions (the
/// original model's DI when that level made no suggestions).
std::map<Level, FairnessReport> group_fairness_delta(const DimensionGrouping& grouping,
                                                     std::span<const WeightSuggestion> suggestions,
                                                     const ScoringModel& model, std::span<const Application> apps,
                                                     const GroupSpec& group);

/// Suggestions split by the level of their session; sessions missing from
/// the grouping are dropped.
std::map<Level, std::vector<WeightSuggestion>> partition_suggestions(const DimensionGrouping& grouping,
                                                                    std::span<const WeightSuggestion> suggestions);

nlohmann::json to_json(const CultureScores& scores);

}  // namespace loanfair
