#pragma once

namespace berknash {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace berknash
