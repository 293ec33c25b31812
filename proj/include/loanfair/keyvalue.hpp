#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace loanfair {

/// Entries of a `key = value` file in file order. Blank lines and `#`
/// comments are skipped; surrounding quotes on values are removed. A line
/// without `=` raises ParseError with its line number.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in);
std::vector<std::pair<std::string, std::string>> load_key_values(const std::filesystem::path& path);

}  // namespace loanfair
