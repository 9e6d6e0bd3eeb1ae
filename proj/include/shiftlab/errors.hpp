#pragma once

#include <stdexcept>
#include <string>

namespace shiftlab {

// A numeric argument is outside the documented domain of an operation.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An estimator was asked to fit with too few samples.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation requires the other shift scenario.
class WrongScenario : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Log-log slope cannot be fitted (too few points or a nonpositive mean).
class RateUndefined : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A computed quantity violated an invariant that only an integration bug can break.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Aggregated configuration problems; what() lists every violation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace shiftlab
