#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace walk {

/// Shortest decimal form that round-trips the double exactly. C locale,
/// '.' separator.
inline std::string csv_num(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) {
      break;
    }
  }
  return buf;
}

}  // namespace walk
