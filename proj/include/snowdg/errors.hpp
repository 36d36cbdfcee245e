#pragma once

#include <stdexcept>
#include <string>

namespace snowdg {

/// Solver or eigensolver failure: non-convergence, indefinite matrix, breakdown.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Requested construction exceeds the configured size guards.
class resource_limit : public std::runtime_error {
public:
    explicit resource_limit(const std::string& what) : std::runtime_error(what) {}
};

/// Mesh failed structural validation (tiling, diameter ratios, slot accounting).
class mesh_error : public std::runtime_error {
public:
    explicit mesh_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace snowdg
