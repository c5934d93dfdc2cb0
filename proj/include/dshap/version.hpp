#pragma once

namespace dshap {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dshap
