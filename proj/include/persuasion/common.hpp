#pragma once

#include <stdexcept>
#include <string>

namespace persuasion {

// Base class for all library errors. Subclasses carry the failing module's
// context in the message; callers that need to distinguish catch the subtype.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

struct NumericalBreakdown : Error {
    explicit NumericalBreakdown(const std::string& what) : Error(what) {}
};

struct InfeasibleTarget : Error {
    explicit InfeasibleTarget(const std::string& what) : Error(what) {}
};

struct DegenerateHull : Error {
    explicit DegenerateHull(const std::string& what) : Error(what) {}
};

struct BoundaryError : Error {
    explicit BoundaryError(const std::string& what) : Error(what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

struct RunError : Error {
    explicit RunError(const std::string& what) : Error(what) {}
};

}  // namespace persuasion
