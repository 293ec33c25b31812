#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace loanfair {

enum class AttributeKind { continuous, categorical, binary };
enum class Decision { rejected, accepted };

std::string_view to_string(AttributeKind kind);
AttributeKind parse_attribute_kind(std::string_view text);
std::string_view to_string(Decision decision);
Decision parse_decision(std::string_view text);

struct AttributeSpec {
  std::string name;
  AttributeKind kind = AttributeKind::continuous;
  /// Ordered labels; the stored value of a categorical attribute is the index.
  std::vector<std::string> categories;
  /// Where the value comes from (applicant-provided, third party, ...).
  std::string provenance;
  bool sensitive = false;

  bool is_categorical() const noexcept { return kind != AttributeKind::continuous; }
  std::optional<std::size_t> category_index(std::string_view label) const;

  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

/// Throws SchemaError when the kind/category invariants are violated.
void validate(const AttributeSpec& spec);

/// Raw attribute value: a number, or a category index. Empty means missing.
using Value = std::optional<double>;

struct Application {
  std::string id;
  std::map<std::string, Value> values;
  std::optional<Decision> label;

  /// Present value of `attribute`; ContractError if absent or missing.
  double value(const std::string& attribute) const;

  friend bool operator==(const Application&, const Application&) = default;
};

/// What prune_attributes did; carried along with the cleaned dataset.
struct CleaningRecord {
  bool applied = false;
  double max_missing_rate = 0.0;
  std::vector<std::string> pruned;
  /// Fill value per attribute (median for continuous, mode for categorical).
  std::map<std::string, double> fill_values;
  std::map<std::string, std::size_t> imputed_counts;

  friend bool operator==(const CleaningRecord&, const CleaningRecord&) = default;
};

/// Descriptor for CSV files: column names and how to read each.
struct Schema {
  std::string id_column = "id";
  std::string label_name = "decision";
  std::vector<AttributeSpec> attributes;

  /// Fingerprint over names, kinds and categories.
  std::string hash() const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

Schema load_schema(const std::filesystem::path& path);
void save_schema(const Schema& schema, const std::filesystem::path& path);

/// Immutable collection of applications over an ordered attribute list.
class Dataset {
 public:
  Dataset() = default;
  /// Validates every application against the attributes (SchemaError).
  Dataset(std::vector<AttributeSpec> attributes, std::vector<Application> applications,
          std::string label_name, CleaningRecord cleaning = {});

  const std::vector<AttributeSpec>& attributes() const noexcept { return attributes_; }
  const std::vector<Application>& applications() const noexcept { return applications_; }
  const std::string& label_name() const noexcept { return label_name_; }
  const CleaningRecord& cleaning() const noexcept { return cleaning_; }
  std::size_t size() const noexcept { return applications_.size(); }
  bool empty() const noexcept { return applications_.empty(); }

  const AttributeSpec& attribute(std::string_view name) const;
  bool has_attribute(std::string_view name) const;
  const Application& find(std::string_view id) const;
  const Application* find_if_present(std::string_view id) const;

  std::size_t missing_count(std::string_view attribute) const;
  double missing_rate(std::string_view attribute) const;

  Schema schema() const { return Schema{"id", label_name_, attributes_}; }

 private:
  std::vector<AttributeSpec> attributes_;
  std::vector<Application> applications_;
  std::string label_name_;
  CleaningRecord cleaning_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

Dataset read_csv(std::istream& in, const Schema& schema);
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);
void write_csv(const Dataset& dataset, std::ostream& out);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Drops attributes whose missing rate is strictly above `max_missing_rate`
/// and imputes the survivors (median / mode).
Dataset prune_attributes(const Dataset& dataset, double max_missing_rate);

/// Seeded random partition into round(n * train_fraction) and the rest.
/// Each part keeps the original application order.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Penalty applied to foreign applicants' latent score by default.
inline constexpr double kDefaultBiasStrength = 1.3;
inline constexpr double kDefaultMaxMissingRate = 0.10;
inline constexpr double kDefaultTrainFraction = 0.7;

/// Raw synthetic schema: 30 attributes, 4 of them missing in more than 10% of rows.
Schema synthetic_schema();

/// Deterministic in (n, seed, bias_strength). Requires n >= 100.
Dataset generate_synthetic(std::size_t n, std::uint64_t seed, double bias_strength = kDefaultBiasStrength);

}  // namespace loanfair
