#pragma once

namespace farel {

inline constexpr const char* version = "0.1.0";

} // namespace farel
