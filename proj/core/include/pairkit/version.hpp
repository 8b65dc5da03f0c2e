#pragma once

namespace pairkit {

inline constexpr const char* kVersion = "pairkit 0.1.0";

}  // namespace pairkit
