#pragma once

#include <stdexcept>
#include <string>

namespace dal {

/// A loss, schedule or noise parameter lies outside its admissible domain.
class ParameterDomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN/Inf or otherwise malformed numeric input.
class InputValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent configuration (class maps, dataset geometry, config files).
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input for which the requested quantity is not uniquely defined (e.g. tied argmax).
class DegenerateInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace dal
