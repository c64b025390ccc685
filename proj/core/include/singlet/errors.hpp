#pragma once

#include <stdexcept>
#include <string>

namespace singlet {

/// Bloch vector outside the unit ball (beyond tolerance).
class InvalidBlochError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// State fails a structural invariant (normalization, hermiticity, trace,
/// positivity, dimension).
class InvalidStateError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Qubit pair with equal or out-of-range indices.
class InvalidPairError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Post-selection on a branch whose Born probability is below the
/// zero-probability threshold.
class ImpossibleBranchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The three supply Bloch vectors are (numerically) linearly dependent.
class DegenerateSuppliesError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Purification requested for a maximally mixed input (no direction to
/// purify along).
class UnpurifiableError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// remove_redundancy on a logical qubit that has only one physical qubit.
class CannotTrimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad experiment configuration (unknown experiment, unwritable path,
/// malformed parameter).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace singlet
