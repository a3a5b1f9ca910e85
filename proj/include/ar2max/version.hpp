#pragma once

namespace ar2max {

inline constexpr const char* version_string = "0.1.0";

}  // namespace ar2max
