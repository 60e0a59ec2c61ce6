#pragma once

namespace ibf {
inline constexpr const char* kVersion = "0.1.0";
}
