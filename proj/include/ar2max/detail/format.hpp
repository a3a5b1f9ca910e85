#pragma once

#include <cstdio>
#include <string>

namespace ar2max::detail {

// Shortest round-trippable decimal form; used by every writer so that
// identical runs produce byte-identical artifacts.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace ar2max::detail
