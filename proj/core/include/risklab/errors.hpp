#pragma once

#include <stdexcept>
#include <string>

namespace risklab {

// Caller mistakes: bad flag values, malformed config, unreadable paths.
// The CLI maps UsageError to exit code 1; anything else that escapes is a
// runtime failure and exits 2.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace risklab
