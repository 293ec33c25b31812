#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace loanfair::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes; no field spans multiple lines.
std::vector<std::string> split_record(std::string_view line);

/// Quotes `field` only when it contains a comma, quote or leading/trailing space.
std::string escape(std::string_view field);

std::string join_record(const std::vector<std::string>& fields);

/// Reads every line of `in`, stripping a trailing '\r' and a leading UTF-8 BOM.
std::vector<std::string> read_lines(std::istream& in);

std::string trim(std::string_view s);

}  // namespace loanfair::csv
