#pragma once

#include <stdexcept>
#include <string>

namespace tti {

// Invalid configuration supplied by the caller (bad dims, bad fractions, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Vector / layer-map length mismatches.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Defense pipeline cannot be set up from the given state (e.g. zero-norm
// global model makes the relative-norm indicator undefined).
struct DefenseSetupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inspection requested but no trusted reference is available.
struct InspectionUnavailableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AggregationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear-algebra failure that survived jitter escalation, NaN in training, ...
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace tti
