#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace sumalign {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// Text that reads back to exactly the same double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace sumalign
