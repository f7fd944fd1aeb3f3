#pragma once

#include <stdexcept>
#include <string>

namespace pnid {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Range went non-positive (or otherwise unusable) during a kinematics evaluation.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

/// A propagated state became NaN/Inf.
class NumericalBlowupError : public Error {
public:
    NumericalBlowupError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// The linear system for the guidance gain / time constant is rank deficient.
class UnidentifiableError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Malformed or inconsistent checkpoint / dataset file.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace pnid
