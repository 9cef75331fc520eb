#pragma once

namespace mslocal {

inline constexpr const char* kVersion = "mslocal 0.1.0";

}  // namespace mslocal
