#pragma once

namespace revmap {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace revmap
