#pragma once

#include <cstdio>
#include <string>

namespace qmoney {

// 12 significant digits, the fixed precision of every CSV/JSON number we emit.
inline std::string fmt12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace qmoney
