#pragma once

#include <stdexcept>
#include <string>

namespace pps {

// A numeric argument lies outside the domain of the operation.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The input is well-formed but too small for the requested statistic.
class DegenerateInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A stream or histogram file could not be parsed.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pps
