#pragma once

namespace sqha {

inline constexpr const char* kToolName = "sqha";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace sqha
