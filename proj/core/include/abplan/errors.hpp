#pragma once

#include <stdexcept>
#include <string>

namespace abplan {

// Precondition / input-contract violations. The CLI maps these to exit 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite or otherwise unusable result.
// The CLI maps these to exit 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace abplan
