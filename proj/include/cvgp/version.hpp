#pragma once

namespace cvgp {
inline constexpr const char* kVersion = "0.1.0";
}
