#pragma once

#include <stdexcept>
#include <string>

namespace disent {

// Caller supplied an invalid argument or configuration value.
struct argument_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input data is malformed or internally inconsistent (files, tables, labels).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Value lies outside the mathematical domain of a transform.
struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Computation cannot proceed: single-class labels, collapsed dimensions,
// zero variance, or an otherwise degenerate input.
struct degenerate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace disent
