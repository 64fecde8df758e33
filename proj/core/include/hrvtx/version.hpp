#pragma once

namespace hrvtx {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hrvtx
