#pragma once

#include <stdexcept>

namespace hqfnn {

/// Malformed or truncated input file.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inputs that are individually well-formed but disagree with each other.
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hqfnn
