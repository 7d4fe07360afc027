#pragma once

#define RASCHKIT_VERSION "0.1.0"

namespace raschkit {

inline constexpr const char* version = RASCHKIT_VERSION;

}  // namespace raschkit
