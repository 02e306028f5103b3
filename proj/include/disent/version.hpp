#pragma once

namespace disent {

inline constexpr const char* tool_name = "disent";
inline constexpr const char* tool_version = "0.1.0";

} // namespace disent
