#pragma once

namespace abplan {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace abplan
