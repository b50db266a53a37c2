#pragma once

namespace nasforge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nasforge
