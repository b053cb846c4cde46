#pragma once

namespace spanmetric {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spanmetric
