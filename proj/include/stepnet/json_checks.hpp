#pragma once

#include "json.hpp"

#include <cstdint>

namespace stepnet {

/// Integer literals parse as signed or unsigned depending on their origin.
inline bool non_negative_integer(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

} // namespace stepnet
