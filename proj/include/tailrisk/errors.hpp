#pragma once

#include <stdexcept>
#include <string>

namespace tailrisk {

/// Raised when distribution parameters violate a family constraint.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an argument lies outside the domain of a function
/// (probability level outside its range, Lambert-W argument below -1/e, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when an iterative method fails to converge.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tailrisk
