#pragma once

#include <stdexcept>
#include <string>

namespace adamlab {

/// Bad argument or precondition violation at an API boundary.
class InvalidArgument : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// A statistic needs more samples than it was given.
class InsufficientData : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Least squares with zero variance in the regressor.
class DegenerateRegression : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Point cloud without two independent in-plane directions.
class DegenerateGeometry : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Corrupt or truncated file contents.
class FormatError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class UnsupportedVersion : public FormatError {
   public:
    using FormatError::FormatError;
};

class IoError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace adamlab
