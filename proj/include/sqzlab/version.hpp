#pragma once

namespace sqzlab {

inline constexpr const char* version = "0.1.0";

}  // namespace sqzlab
