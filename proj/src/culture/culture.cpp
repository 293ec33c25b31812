#include "loanfair/culture.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "loanfair/csv.hpp"
#include "loanfair/error.hpp"

namespace loanfair {

namespace {

constexpr const char* kMissing = "#NULL!";

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Record {
  std::size_t line;
  std::vector<std::string> fields;
};

std::vector<Record> read_table(std::istream& in, std::size_t columns, const char* what) {
  const auto lines = csv::read_lines(in);
  std::vector<Record> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    auto fields = csv::split_record(lines[i]);
    if (fields.size() != columns)
      throw ParseError(i + 1, std::string(what) + ": expected " + std::to_string(columns) + " fields");
    for (auto& f : fields) f = csv::trim(f);
    rows.push_back({i + 1, std::move(fields)});
  }
  if (lines.empty()) throw ParseError(1, std::string(what) + ": missing header");
  return rows;
}

std::optional<double> parse_score(const std::string& text, std::size_t line) {
  if (text.empty() || text == kMissing) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ParseError(line, "score '" + text + "' is not a number");
  return v;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(Dimension dimension) {
  switch (dimension) {
    case Dimension::pd: return "PD";
    case Dimension::idv: return "IDV";
    case Dimension::msc: return "MSC";
    case Dimension::ua: return "UA";
    case Dimension::lto: return "LTO";
    case Dimension::idg: return "IDG";
  }
  return "PD";
}

Dimension parse_dimension(std::string_view text) {
  const auto t = lower(text);
  for (auto d : kDimensions)
    if (lower(to_string(d)) == t) return d;
  throw ValidationError("dimension", "unknown cultural dimension '" + std::string(text) + "'");
}

std::string_view to_string(Level level) { return level == Level::high ? "H" : "L"; }

CultureTable::CultureTable(std::istream& matrix, std::istream& neighbors, std::istream& aliases) {
  for (const auto& [line, f] : read_table(matrix, 7, "score matrix")) {
    CultureRow row;
    row.country = f[0];
    for (std::size_t d = 0; d < 6; ++d) row.values[d] = parse_score(f[d + 1], line);
    rows_.push_back(std::move(row));
  }
  for (const auto& r : read_table(neighbors, 2, "neighbour list")) neighbors_.emplace(r.fields[0], r.fields[1]);
  for (const auto& r : read_table(aliases, 2, "alias list")) aliases_[r.fields[0]] = r.fields[1];
}

CultureTable::CultureTable(std::vector<CultureRow> rows, std::multimap<std::string, std::string> neighbors,
                           std::map<std::string, std::string> aliases)
    : rows_(std::move(rows)), neighbors_(std::move(neighbors)), aliases_(std::move(aliases)) {}

CultureTable CultureTable::load(const std::filesystem::path& matrix, const std::filesystem::path& neighbors,
                                const std::filesystem::path& aliases) {
  auto m = open(matrix);
  auto n = open(neighbors);
  auto a = open(aliases);
  return CultureTable(m, n, a);
}

CultureTable CultureTable::load_bundled() {
  const std::filesystem::path dir = std::filesystem::path(LOANFAIR_DATA_DIR) / "culture";
  return load(dir / "hofstede_matrix.csv", dir / "neighbors.csv", dir / "country_aliases.csv");
}

const CultureRow* CultureTable::find_row(const std::string& name) const {
  for (const auto& r : rows_)
    if (r.country == name) return &r;
  return nullptr;
}

std::optional<std::string> CultureTable::canonical(std::string_view name) const {
  const std::string key = csv::trim(name);
  if (key.empty()) return std::nullopt;
  if (find_row(key) || neighbors_.count(key)) return key;
  if (auto it = aliases_.find(key); it != aliases_.end()) return it->second;
  const auto folded = lower(key);
  for (const auto& r : rows_)
    if (lower(r.country) == folded) return r.country;
  for (const auto& [alias, target] : aliases_)
    if (lower(alias) == folded) return target;
  for (const auto& [country, neighbor] : neighbors_)
    if (lower(country) == folded) return country;
  return std::nullopt;
}

CultureScores CultureTable::resolve(std::string_view country) const {
  const auto name = canonical(country);
  if (!name) throw UnresolvedCountryError(std::string(country));
  const CultureRow* row = find_row(*name);
  const auto [first, last] = neighbors_.equal_range(*name);
  if (!row && first == last) throw UnresolvedCountryError(*name);

  CultureScores out;
  out.country = *name;
  for (std::size_t d = 0; d < 6; ++d) {
    if (row && row->values[d]) {
      out.values[d] = *row->values[d];
      continue;
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (auto it = first; it != last; ++it) {
      const CultureRow* n = find_row(it->second);
      if (n && n->values[d]) {
        sum += *n->values[d];
        ++count;
      }
    }
    if (count == 0) throw UnresolvedCountryError(*name);
    out.values[d] = sum / static_cast<double>(count);
  }
  return out;
}

std::map<std::string, CultureScores> CultureTable::resolved_scores() const {
  std::map<std::string, CultureScores> out;
  for (const auto& r : rows_) {
    try {
      out.emplace(r.country, resolve(r.country));
    } catch (const UnresolvedCountryError&) {
    }
  }
  return out;
}

std::array<double, 6> dimension_means(const CultureTable& table) {
  if (table.rows().empty()) throw ContractError("score matrix is empty");
  std::array<double, 6> sum{}, count{};
  for (const auto& r : table.rows())
    for (std::size_t d = 0; d < 6; ++d)
      if (r.values[d]) {
        sum[d] += *r.values[d];
        count[d] += 1.0;
      }
  std::array<double, 6> mean{};
  for (std::size_t d = 0; d < 6; ++d) {
    if (count[d] == 0.0) throw ContractError("no published score for " + std::string(to_string(kDimensions[d])));
    mean[d] = sum[d] / count[d];
  }
  return mean;
}

std::array<double, 6> dimension_means(std::span<const CultureScores> scores) {
  if (scores.empty()) throw ContractError("no scores to average");
  std::array<double, 6> mean{};
  for (const auto& s : scores)
    for (std::size_t d = 0; d < 6; ++d) mean[d] += s.values[d];
  for (auto& m : mean) m /= static_cast<double>(scores.size());
  return mean;
}

std::string SessionCountry::effective() const {
  for (const auto* field :
       {&registered_residence, &registered_birth_country, &questionnaire_residence, &questionnaire_nationality}) {
    auto t = csv::trim(*field);
    if (!t.empty()) return t;
  }
  return {};
}

std::vector<std::string> DimensionGrouping::sessions(Level level) const {
  std::vector<std::string> out;
  for (const auto& [session, l] : assignment)
    if (l == level) out.push_back(session);
  return out;
}

Level level_for(double score, double mean) { return score > mean ? Level::high : Level::low; }

GroupAssignment assign_groups(std::span<const SessionCountry> sessions, const CultureTable& table,
                              const std::array<double, 6>& means) {
  GroupAssignment out;
  for (auto d : kDimensions) out.groupings.push_back({d, means[static_cast<std::size_t>(d)], {}});
  for (const auto& s : sessions) {
    const auto country = s.effective();
    if (country.empty()) {
      out.unresolved[s.session_id] = "no country given";
      continue;
    }
    try {
      const auto scores = table.resolve(country);
      for (auto& g : out.groupings) g.assignment[s.session_id] = level_for(scores[g.dimension], g.mean);
    } catch (const UnresolvedCountryError& e) {
      out.unresolved[s.session_id] = e.what();
    }
  }
  return out;
}

std::map<Level, std::vector<WeightSuggestion>> partition_suggestions(const DimensionGrouping& grouping,
                                                                    std::span<const WeightSuggestion> suggestions) {
  std::map<Level, std::vector<WeightSuggestion>> out{{Level::low, {}}, {Level::high, {}}};
  for (const auto& s : suggestions)
    if (auto it = grouping.assignment.find(s.session_id); it != grouping.assignment.end())
      out[it->second].push_back(s);
  return out;
}

std::map<Level, FairnessReport> group_fairness_delta(const DimensionGrouping& grouping,
                                                     std::span<const WeightSuggestion> suggestions,
                                                     const ScoringModel& model, std::span<const Application> apps,
                                                     const GroupSpec& group) {
  std::map<Level, FairnessReport> out;
  for (const auto& [level, subset] : partition_suggestions(grouping, suggestions))
    out[level] = fairness_delta(aggregate(subset, model, apps), model, apps, group).after;
  return out;
}

nlohmann::json to_json(const CultureScores& scores) {
  nlohmann::json doc{{"country", scores.country}};
  for (auto d : kDimensions) doc[lower(to_string(d))] = scores[d];
  return doc;
}

}  // namespace loanfair
