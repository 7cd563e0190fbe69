#pragma once
#include <stdexcept>
#include <string>

namespace ct {

// Shared error taxonomy. Each type corresponds to one named failure mode of
// an operation contract; the CLI maps them onto exit codes.

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// density construction
struct NonPositiveDensity : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DecreasingDensity : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoPositiveRho : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// radial ODE solving
struct SeriesDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StiffnessFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroLambda : DomainError {
    using DomainError::DomainError;
};
struct MatchRadiusTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WronskianDegenerate : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotInLowerHalfPlane : DomainError {
    using DomainError::DomainError;
};

// transforms
struct UnboundedSupport : DomainError {
    using DomainError::DomainError;
};
struct TailTooFat : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InconsistentCalibration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct InvalidPoint : DomainError {
    using DomainError::DomainError;
};
struct CoincidentDirections : DomainError {
    using DomainError::DomainError;
};
struct QuadratureFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// configuration / CLI
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ct
