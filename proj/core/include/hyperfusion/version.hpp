#pragma once

#include <cstdint>

namespace hyperfusion {

inline constexpr const char* kToolVersion = "0.1.0";

// Bumped whenever any artifact layout changes.
inline constexpr std::uint32_t kArtifactVersion = 1;

}  // namespace hyperfusion
