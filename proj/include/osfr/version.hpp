#pragma once

namespace osfr {

inline constexpr const char* kToolName = "osfr";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace osfr
