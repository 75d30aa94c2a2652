#pragma once

#include <stdexcept>
#include <string>

namespace saddlekit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument, dimension mismatch, violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Cholesky pivot <= 0, or an eigenvalue that should be positive is not.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Triangular solve hit a zero diagonal entry.
class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// An iterative kernel (SVD, QR iteration) exceeded its iteration cap.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace saddlekit
