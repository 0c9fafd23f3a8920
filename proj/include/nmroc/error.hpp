#pragma once

#include <stdexcept>
#include <string>

namespace nmroc {

// Malformed input: bad CSV, schema violations, dimension mismatches.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Degenerate data or a numerical breakdown (singular information, vanishing density).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nmroc
