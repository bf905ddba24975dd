#pragma once

#include <stdexcept>
#include <string>

namespace mmta {

// Scenario or graph data violates a structural invariant.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Blocks or vectors do not conform; message names the offending block.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimization machinery failed in a way that is not plain infeasibility.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mmta
