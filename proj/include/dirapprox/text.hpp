#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dirapprox {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Strict parsers: the whole (trimmed) token must be consumed. Errors are
/// kParse and mention `what`.
std::int64_t parse_int(std::string_view token, const std::string& what);
double parse_double(std::string_view token, const std::string& what);
std::vector<double> parse_double_list(std::string_view token, const std::string& what);

/// Round-trip decimal (%.17g).
std::string format_number(double v);

}  // namespace dirapprox
