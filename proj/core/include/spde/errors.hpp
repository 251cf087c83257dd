#pragma once

#include <stdexcept>
#include <string>

namespace spde {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A bilinear form (or covariance) failed positive-semidefiniteness validation.
class FormNotPsd : public Error {
public:
    using Error::Error;
};

/// Operand dimensions do not agree.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// An operation received an empty input where at least one element is required.
class EmptyInput : public Error {
public:
    using Error::Error;
};

/// Requested partition refinement level exceeds the supported maximum.
class LevelTooFine : public Error {
public:
    using Error::Error;
};

/// A partition family expected to be nested is not.
class PartitionNotNested : public Error {
public:
    using Error::Error;
};

/// The linear system (B + eps*R) is numerically singular.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Newton iteration for an implicit step did not converge.
class ImplicitSolveFailed : public Error {
public:
    using Error::Error;
};

/// Picard fixed-point iteration exceeded its iteration budget.
class PicardDiverged : public Error {
public:
    using Error::Error;
};

/// Truncation-radius escalation exceeded the supported exponent range.
class RadiusOverflow : public Error {
public:
    using Error::Error;
};

/// Nonlinearity exponent outside the supported range.
class UnsupportedExponent : public Error {
public:
    using Error::Error;
};

/// A pointwise weight that must be nonnegative is negative somewhere.
class InvalidWeight : public Error {
public:
    using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A path solve produced a non-finite state.
class NonFiniteState : public Error {
public:
    using Error::Error;
};

}  // namespace spde
