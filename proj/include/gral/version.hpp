#pragma once

namespace gral {
inline constexpr const char* kVersion = "0.1.0";
}
