#include "loanfair/keyvalue.hpp"

#include <fstream>
#include <istream>

#include "loanfair/csv.hpp"
#include "loanfair/error.hpp"

namespace loanfair {

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text(csv::trim(line));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    std::string key(csv::trim(std::string_view(text).substr(0, eq)));
    std::string value(csv::trim(std::string_view(text).substr(eq + 1)));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

std::vector<std::pair<std::string, std::string>> load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  return parse_key_values(in);
}

}  // namespace loanfair
