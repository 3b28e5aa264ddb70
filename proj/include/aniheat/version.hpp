#pragma once

namespace aniheat {

inline constexpr const char* kToolName = "aheat";
inline constexpr const char* kToolVersion = "0.1.0";

} // namespace aniheat
