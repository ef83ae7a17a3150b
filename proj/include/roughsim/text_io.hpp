#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace roughsim {

/// Formats a double with 17 significant digits; parsing it back is exact.
std::string fmt17(double value);
/// Fewest digits (15 to 17) that still parse back exactly.
std::string fmt_short(double value);
/// Shorter human-facing formatting (%.6g).
std::string fmt6(double value);

std::vector<std::string> split(std::string_view text, char delimiter);
std::string trim(std::string_view text);

/// Strict parsers: the whole token must be consumed.
double parse_double(std::string_view token, std::string_view what);
std::int64_t parse_int(std::string_view token, std::string_view what);
std::uint64_t parse_uint(std::string_view token, std::string_view what);
std::vector<double> parse_double_list(std::string_view text,
                                      std::string_view what);

std::ofstream open_output(const std::string& path);
std::ifstream open_input(const std::string& path);

/// key=value lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> read_key_values(const std::string& path);
void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace roughsim
