#pragma once

namespace evsel {
inline constexpr const char* kVersion = "0.1.0";
}
