#pragma once

namespace rnml {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rnml
