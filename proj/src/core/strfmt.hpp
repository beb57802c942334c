#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace quafl {

// Shortest representation that round-trips the exact double; keeps CSV and
// JSON output byte-stable across reruns.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw std::invalid_argument("not a number: " + s);
  return v;
}

}  // namespace quafl
