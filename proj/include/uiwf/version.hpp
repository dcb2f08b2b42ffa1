#pragma once

namespace uiwf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace uiwf
