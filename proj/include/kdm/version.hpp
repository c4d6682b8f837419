#pragma once

namespace kdm {
inline constexpr const char* kVersion = "0.1.0";
}
