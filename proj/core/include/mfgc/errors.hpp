#pragma once

#include <stdexcept>
#include <string>

namespace mfgc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cyclic tridiagonal matrix is not strictly diagonally dominant.
class DominanceViolation : public Error {
public:
    using Error::Error;
};

/// Forward step requested with dt * max|b| / h > 1 while the guard is on.
class CflViolation : public Error {
public:
    using Error::Error;
};

/// An iteration exhausted its budget and shows no sign of contracting.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// The requested model variant has no closed-form Hamiltonian.
class UnsupportedVariant : public Error {
public:
    using Error::Error;
};

/// A kernel normaliser Z(x) vanished on the support of m.
class DegenerateKernel : public Error {
public:
    using Error::Error;
};

/// A diagnostic needs a structural constant the model did not declare.
class MissingConstants : public Error {
public:
    using Error::Error;
};

/// Arguments outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace mfgc
