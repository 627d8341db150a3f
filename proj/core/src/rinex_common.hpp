#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>

namespace hapsnav::rinex_detail {

/// Fixed-width column slice, clipped to the line length.
std::string_view field(std::string_view line, std::size_t pos, std::size_t len);
std::string_view trim(std::string_view s);
/// Header label in columns 61-80.
std::string_view label(std::string_view line);
std::optional<int> parse_int(std::string_view f);
/// getline that strips a trailing CR and counts lines.
bool read_line(std::istream& in, std::string& line, int& line_no);
/// Two-digit RINEX 2 years: 80-99 -> 19xx, 00-79 -> 20xx.
int expand_year(int y);

}  // namespace hapsnav::rinex_detail
