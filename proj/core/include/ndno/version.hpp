#pragma once

namespace ndno {
inline constexpr const char* kVersion = "0.1.0";
}
