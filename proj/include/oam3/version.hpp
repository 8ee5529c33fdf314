#pragma once

namespace oam3 {

inline constexpr const char* kVersion = "0.1.0";

}
