#pragma once

#include <stdexcept>
#include <string>

namespace nam {

/// Invalid parameters or a violated configuration guard.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read, written, or parsed.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative procedure exhausted its budget without meeting its target.
struct NotConvergedError : std::runtime_error {
    explicit NotConvergedError(const std::string& what) : std::runtime_error(what) {}
};

/// An exhaustive check would exceed its combinatorial budget.
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nam
