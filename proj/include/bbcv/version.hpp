#pragma once

namespace bbcv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bbcv
