#pragma once

#include <stdexcept>
#include <string>

namespace rdmft {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: invalid grids, out-of-range parameters, malformed files.
// The CLI maps these to exit code 2.
struct config_error : error {
    using error::error;
};

// Numerical failure: solver non-convergence, invariant violations detected
// at runtime. The CLI maps these to exit code 3.
struct numeric_error : error {
    using error::error;
};

// A requested basis would exceed the configured state cap.
struct dimension_error : config_error {
    using config_error::config_error;
};

// A constructed 1RDM is not N-representable (fails the PSD check).
struct representability_error : numeric_error {
    using numeric_error::numeric_error;
};

}  // namespace rdmft
