#include "dirapprox/text.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

#include "dirapprox/error.hpp"

namespace dirapprox {

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::int64_t parse_int(std::string_view token, const std::string& what) {
  const std::string t = trim(token);
  if (t.empty()) fail(ErrorCode::kParse, what + ": empty integer");
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (errno != 0 || end != t.c_str() + t.size()) {
    fail(ErrorCode::kParse, what + ": '" + t + "' is not an integer");
  }
  return v;
}

double parse_double(std::string_view token, const std::string& what) {
  const std::string t = trim(token);
  if (t.empty()) fail(ErrorCode::kParse, what + ": empty number");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (errno == ERANGE || end != t.c_str() + t.size()) {
    fail(ErrorCode::kParse, what + ": '" + t + "' is not a number");
  }
  return v;
}

std::vector<double> parse_double_list(std::string_view token, const std::string& what) {
  std::string t = trim(token);
  if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
  std::vector<double> out;
  for (const auto& part : split(t, ',')) out.push_back(parse_double(part, what));
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace dirapprox
