#include "loanfair/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "loanfair/csv.hpp"
#include "loanfair/error.hpp"
#include "loanfair/hash.hpp"

namespace loanfair {

namespace {

std::optional<double> parse_number(std::string_view text) {
  double out = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) return std::nullopt;
  return out;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::continuous: return "continuous";
    case AttributeKind::categorical: return "categorical";
    case AttributeKind::binary: return "binary";
  }
  return "continuous";
}

AttributeKind parse_attribute_kind(std::string_view text) {
  if (text == "continuous") return AttributeKind::continuous;
  if (text == "categorical") return AttributeKind::categorical;
  if (text == "binary") return AttributeKind::binary;
  throw SchemaError("unknown attribute kind '" + std::string(text) + "'");
}

std::string_view to_string(Decision decision) {
  return decision == Decision::accepted ? "accepted" : "rejected";
}

Decision parse_decision(std::string_view text) {
  if (text == "accepted") return Decision::accepted;
  if (text == "rejected") return Decision::rejected;
  throw ContractError("decision must be 'accepted' or 'rejected', got '" + std::string(text) + "'");
}

std::optional<std::size_t> AttributeSpec::category_index(std::string_view label) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == label) return i;
  return std::nullopt;
}

void validate(const AttributeSpec& spec) {
  if (spec.name.empty()) throw SchemaError("attribute with empty name");
  switch (spec.kind) {
    case AttributeKind::continuous:
      if (!spec.categories.empty())
        throw SchemaError("continuous attribute '" + spec.name + "' must not list categories");
      break;
    case AttributeKind::categorical:
      if (spec.categories.size() < 2)
        throw SchemaError("categorical attribute '" + spec.name + "' needs at least 2 categories");
      break;
    case AttributeKind::binary:
      if (spec.categories.size() != 2)
        throw SchemaError("binary attribute '" + spec.name + "' needs exactly 2 categories");
      break;
  }
  std::set<std::string> seen(spec.categories.begin(), spec.categories.end());
  if (seen.size() != spec.categories.size())
    throw SchemaError("attribute '" + spec.name + "' has duplicate categories");
}

double Application::value(const std::string& attribute) const {
  auto it = values.find(attribute);
  if (it == values.end())
    throw ContractError("application '" + id + "' has no attribute '" + attribute + "'");
  if (!it->second)
    throw ContractError("application '" + id + "' is missing a value for '" + attribute + "'");
  return *it->second;
}

std::string Schema::hash() const {
  Fnv1a64 h;
  for (const auto& a : attributes) {
    h.update(a.name);
    h.update("\x1f");
    h.update(to_string(a.kind));
    for (const auto& c : a.categories) {
      h.update("\x1e");
      h.update(c);
    }
    h.update("\x1d");
  }
  return h.hex();
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + " is not valid JSON: " + e.what());
  }
  Schema schema;
  try {
    schema.id_column = doc.value("id_column", std::string("id"));
    schema.label_name = doc.value("label_name", std::string("decision"));
    for (const auto& a : doc.at("attributes")) {
      AttributeSpec spec;
      spec.name = a.at("name").get<std::string>();
      spec.kind = parse_attribute_kind(a.at("kind").get<std::string>());
      spec.categories = a.value("categories", std::vector<std::string>{});
      spec.provenance = a.value("provenance", std::string{});
      spec.sensitive = a.value("sensitive", false);
      schema.attributes.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
  std::set<std::string> names;
  for (const auto& a : schema.attributes) {
    validate(a);
    if (!names.insert(a.name).second) throw SchemaError("duplicate attribute '" + a.name + "'");
  }
  return schema;
}

void save_schema(const Schema& schema, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["id_column"] = schema.id_column;
  doc["label_name"] = schema.label_name;
  doc["schema_hash"] = schema.hash();
  auto& attrs = doc["attributes"] = nlohmann::json::array();
  for (const auto& a : schema.attributes) {
    attrs.push_back({{"name", a.name},
                     {"kind", to_string(a.kind)},
                     {"categories", a.categories},
                     {"provenance", a.provenance},
                     {"sensitive", a.sensitive}});
  }
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write schema file " + path.string());
  out << doc.dump(2) << '\n';
}

Dataset::Dataset(std::vector<AttributeSpec> attributes, std::vector<Application> applications,
                 std::string label_name, CleaningRecord cleaning)
    : attributes_(std::move(attributes)),
      applications_(std::move(applications)),
      label_name_(std::move(label_name)),
      cleaning_(std::move(cleaning)) {
  std::set<std::string, std::less<>> names;
  for (const auto& a : attributes_) {
    validate(a);
    if (!names.insert(a.name).second) throw SchemaError("duplicate attribute '" + a.name + "'");
  }
  for (std::size_t i = 0; i < applications_.size(); ++i) {
    const auto& app = applications_[i];
    if (app.values.size() != attributes_.size())
      throw SchemaError("application '" + app.id + "' does not match the attribute list");
    for (const auto& a : attributes_) {
      auto it = app.values.find(a.name);
      if (it == app.values.end())
        throw SchemaError("application '" + app.id + "' lacks attribute '" + a.name + "'");
      if (it->second && a.is_categorical()) {
        const double v = *it->second;
        if (v < 0 || v >= static_cast<double>(a.categories.size()) || v != std::floor(v))
          throw SchemaError("application '" + app.id + "': category index out of range for '" + a.name + "'");
      }
    }
    if (!by_id_.emplace(app.id, i).second) throw SchemaError("duplicate application id '" + app.id + "'");
  }
}

const AttributeSpec& Dataset::attribute(std::string_view name) const {
  for (const auto& a : attributes_)
    if (a.name == name) return a;
  throw NotFoundError("unknown attribute '" + std::string(name) + "'");
}

bool Dataset::has_attribute(std::string_view name) const {
  return std::any_of(attributes_.begin(), attributes_.end(), [&](const auto& a) { return a.name == name; });
}

const Application& Dataset::find(std::string_view id) const {
  if (const auto* app = find_if_present(id)) return *app;
  throw NotFoundError("unknown application '" + std::string(id) + "'");
}

const Application* Dataset::find_if_present(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &applications_[it->second];
}

std::size_t Dataset::missing_count(std::string_view attribute) const {
  const std::string key(attribute);
  return static_cast<std::size_t>(std::count_if(applications_.begin(), applications_.end(), [&](const auto& app) {
    auto it = app.values.find(key);
    return it == app.values.end() || !it->second;
  }));
}

double Dataset::missing_rate(std::string_view attribute) const {
  if (applications_.empty()) return 0.0;
  return static_cast<double>(missing_count(attribute)) / static_cast<double>(applications_.size());
}

Dataset read_csv(std::istream& in, const Schema& schema) {
  const auto lines = csv::read_lines(in);
  if (lines.empty()) throw SchemaError("CSV input has no header row");
  const auto header = csv::split_record(lines.front());

  std::map<std::string, const AttributeSpec*> specs;
  for (const auto& a : schema.attributes) specs[a.name] = &a;

  // Column role: -1 id, -2 label, otherwise attribute index.
  std::vector<const AttributeSpec*> columns(header.size(), nullptr);
  std::optional<std::size_t> id_col, label_col;
  std::set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = csv::trim(header[c]);
    if (!seen.insert(name).second) throw SchemaError("duplicate column '" + name + "'");
    if (name == schema.id_column) {
      id_col = c;
    } else if (name == schema.label_name) {
      label_col = c;
    } else if (auto it = specs.find(name); it != specs.end()) {
      columns[c] = it->second;
    } else {
      throw SchemaError("unknown column '" + name + "'");
    }
  }
  for (const auto& a : schema.attributes)
    if (!seen.count(a.name)) throw SchemaError("missing column '" + a.name + "'");

  std::vector<Application> apps;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (csv::trim(lines[row]).empty()) continue;
    const std::size_t line_no = row + 1;
    const auto fields = csv::split_record(lines[row]);
    if (fields.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    Application app;
    app.id = id_col ? csv::trim(fields[*id_col]) : "row" + std::to_string(row);
    if (app.id.empty()) throw ParseError(line_no, "empty application id");
    if (label_col) {
      const auto text = csv::trim(fields[*label_col]);
      if (!text.empty()) {
        if (text == "accepted" || text == "1")
          app.label = Decision::accepted;
        else if (text == "rejected" || text == "0")
          app.label = Decision::rejected;
        else
          throw ParseError(line_no, "invalid label '" + text + "'");
      }
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const AttributeSpec* spec = columns[c];
      if (!spec) continue;
      const auto text = csv::trim(fields[c]);
      if (text.empty()) {
        app.values[spec->name] = std::nullopt;
        continue;
      }
      if (spec->is_categorical()) {
        auto idx = spec->category_index(text);
        if (!idx) throw ParseError(line_no, "'" + text + "' is not a category of '" + spec->name + "'");
        app.values[spec->name] = static_cast<double>(*idx);
      } else {
        auto number = parse_number(text);
        if (!number) throw ParseError(line_no, "non-numeric value '" + text + "' in column '" + spec->name + "'");
        app.values[spec->name] = *number;
      }
    }
    apps.push_back(std::move(app));
  }
  return Dataset(schema.attributes, std::move(apps), schema.label_name);
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  std::vector<std::string> header{"id"};
  for (const auto& a : dataset.attributes()) header.push_back(a.name);
  header.push_back(dataset.label_name());
  out << csv::join_record(header) << '\n';
  for (const auto& app : dataset.applications()) {
    std::vector<std::string> fields{app.id};
    for (const auto& a : dataset.attributes()) {
      const auto& v = app.values.at(a.name);
      if (!v)
        fields.emplace_back();
      else if (a.is_categorical())
        fields.push_back(a.categories.at(static_cast<std::size_t>(*v)));
      else
        fields.push_back(format_number(*v));
    }
    fields.emplace_back(app.label ? std::string(to_string(*app.label)) : std::string{});
    out << csv::join_record(fields) << '\n';
  }
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  write_csv(dataset, out);
}

Dataset prune_attributes(const Dataset& dataset, double max_missing_rate) {
  if (!(max_missing_rate > 0.0 && max_missing_rate < 1.0))
    throw ContractError("max_missing_rate must lie in (0, 1)");

  CleaningRecord record;
  record.applied = true;
  record.max_missing_rate = max_missing_rate;
  std::vector<AttributeSpec> kept;
  for (const auto& a : dataset.attributes()) {
    if (dataset.missing_rate(a.name) > max_missing_rate)
      record.pruned.push_back(a.name);
    else
      kept.push_back(a);
  }
  if (kept.empty()) throw EmptyDatasetError("every attribute exceeds the missing-value threshold");

  for (const auto& a : kept) {
    std::vector<double> present;
    for (const auto& app : dataset.applications())
      if (const auto& v = app.values.at(a.name)) present.push_back(*v);
    if (present.size() == dataset.size()) continue;
    if (present.empty()) throw EmptyDatasetError("attribute '" + a.name + "' has no observed values");
    double fill = 0.0;
    if (a.is_categorical()) {
      std::vector<std::size_t> counts(a.categories.size(), 0);
      for (double v : present) ++counts[static_cast<std::size_t>(v)];
      fill = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    } else {
      std::sort(present.begin(), present.end());
      const std::size_t mid = present.size() / 2;
      fill = present.size() % 2 == 1 ? present[mid] : 0.5 * (present[mid - 1] + present[mid]);
    }
    record.fill_values[a.name] = fill;
    record.imputed_counts[a.name] = dataset.size() - present.size();
  }

  std::vector<Application> apps;
  apps.reserve(dataset.size());
  for (const auto& src : dataset.applications()) {
    Application app{src.id, {}, src.label};
    for (const auto& a : kept) {
      const auto& v = src.values.at(a.name);
      app.values[a.name] = v ? v : Value(record.fill_values.at(a.name));
    }
    apps.push_back(std::move(app));
  }
  return Dataset(std::move(kept), std::move(apps), dataset.label_name(), std::move(record));
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ContractError("train_fraction must lie in (0, 1)");
  const std::size_t n = dataset.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit bounded draw so the partition does not
  // depend on the standard library's distribution implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    std::swap(order[i - 1], order[draw % bound]);
  }
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  std::vector<Application> train, test;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? train : test).push_back(dataset.applications()[i]);
  return {Dataset(dataset.attributes(), std::move(train), dataset.label_name(), dataset.cleaning()),
          Dataset(dataset.attributes(), std::move(test), dataset.label_name(), dataset.cleaning())};
}

}  // namespace loanfair
