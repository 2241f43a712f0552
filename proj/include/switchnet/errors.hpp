#pragma once

#include <stdexcept>
#include <string>

namespace switchnet {

/// Input violates a model invariant (bad config, dimension mismatch, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A brute-force routine was asked to work past its configured size cap.
class CapExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Arrival rates put some resource pool at or above unit load.
class InadmissibleLoad : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace switchnet
