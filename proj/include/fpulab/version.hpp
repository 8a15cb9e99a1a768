#pragma once

namespace fpulab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fpulab
