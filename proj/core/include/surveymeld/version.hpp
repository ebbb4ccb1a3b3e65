#pragma once

namespace meld {
inline constexpr const char* kVersion = "0.1.0";
}
