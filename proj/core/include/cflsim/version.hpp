#pragma once

namespace cflsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cflsim
