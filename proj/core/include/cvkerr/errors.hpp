#pragma once

#include <stdexcept>
#include <string>

namespace cvkerr {

/// Post-transform boundary mass exceeded the aliasing guard.
struct AliasingError : std::runtime_error {
    explicit AliasingError(const std::string& what) : std::runtime_error(what) {}
};

/// A basis conversion lost too much norm to be trusted.
struct TruncationError : std::runtime_error {
    explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix logarithm requested with an eigenvalue at or near the -1 branch cut.
struct BranchCutError : std::runtime_error {
    explicit BranchCutError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cvkerr
