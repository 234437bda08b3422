#pragma once

#include <stdexcept>
#include <string>

namespace farel {

/// Raised when an input violates a documented contract (bad schema, malformed
/// interaction, invalid config). Carries a human readable diagnostic.
class contract_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) {
        throw contract_error(what);
    }
}

} // namespace farel
