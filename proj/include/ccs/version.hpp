#pragma once

namespace ccs {

inline constexpr const char* kVersion = "1.0.0";

} // namespace ccs
