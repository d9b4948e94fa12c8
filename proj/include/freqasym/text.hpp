#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace freqasym::text {

/// Shortest representation that parses back to the same double.
std::string shortest(double v);
/// printf-style fixed notation.
std::string fixed(double v, int decimals);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string lower(std::string_view s);

/// Strict numeric parsing: the whole field must be consumed.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);
bool parse_bool(std::string_view s, bool& out);

} // namespace freqasym::text
