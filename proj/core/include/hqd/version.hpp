#pragma once

namespace hqd {

inline constexpr const char* kVersion = "0.1.0";

} // namespace hqd
