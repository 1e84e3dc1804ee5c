#pragma once

namespace qfdt {
inline constexpr const char* kVersion = "0.1.0";
}
