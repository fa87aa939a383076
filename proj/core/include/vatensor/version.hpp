#pragma once

namespace vatensor {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vatensor
