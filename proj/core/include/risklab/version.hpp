#pragma once

namespace risklab {

inline constexpr const char* kVersion = "0.1.0";

} // namespace risklab
