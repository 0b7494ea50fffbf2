#pragma once

#include <stdexcept>
#include <string>

namespace phonon_forge {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Requested variant that the model does not cover (e.g. closed form for n > 2).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Configuration rejected before any computation starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Fock-space truncation too small for the requested tail tolerance.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Phase-space grid cannot hold the distribution. Carries a suggested extent.
class GridError : public Error {
public:
    GridError(const std::string& what, double suggested_half_width)
        : Error(what), suggested_half_width_(suggested_half_width) {}

    double suggested_half_width() const noexcept { return suggested_half_width_; }

private:
    double suggested_half_width_;
};

// Result failed a numerical validity check (calibration anchor, singular matrix, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace phonon_forge
