#pragma once

#include <stdexcept>
#include <string>

namespace nullgeo {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration or API misuse (bad dimensions, unknown names, base mismatch).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Failure of a numerical procedure (chart exit, blow-up, no convergence).
class NumericError : public Error {
public:
    using Error::Error;
};

class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

class BaseMismatch : public UsageError {
public:
    using UsageError::UsageError;
};

class ZeroVector : public UsageError {
public:
    using UsageError::UsageError;
};

class DegenerateFrame : public NumericError {
public:
    using NumericError::NumericError;
};

class StepFailure : public NumericError {
public:
    using NumericError::NumericError;
};

class NullDriftError : public NumericError {
public:
    using NumericError::NumericError;
};

class MissingFrame : public UsageError {
public:
    using UsageError::UsageError;
};

class BlowUp : public NumericError {
public:
    BlowUp(const std::string& what, double last_regular_s)
        : NumericError(what), last_regular_s_(last_regular_s) {}
    double last_regular_s() const noexcept { return last_regular_s_; }

private:
    double last_regular_s_;
};

class ConjugatePoint : public NumericError {
public:
    ConjugatePoint(const std::string& what, double s) : NumericError(what), s_(s) {}
    double s() const noexcept { return s_; }

private:
    double s_;
};

class NotTimelike : public NumericError {
public:
    using NumericError::NumericError;
};

class NotSpacelike : public NumericError {
public:
    using NumericError::NumericError;
};

class BoundaryStencil : public UsageError {
public:
    using UsageError::UsageError;
};

class NoConvergence : public NumericError {
public:
    using NumericError::NumericError;
};

class LatticeMismatch : public UsageError {
public:
    using UsageError::UsageError;
};

class UnknownHypersurface : public UsageError {
public:
    using UsageError::UsageError;
};

/// A checked geometric inequality failed (e.g. the focusing bound under the
/// null energy condition).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace nullgeo
