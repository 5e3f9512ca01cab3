#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pnplab {

/// Input with the wrong shape or non-finite entries.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scalar parameter outside its admissible range (delta <= 0, theta not in (0,1), ...).
class InvalidParameter : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// D is numerically the identity, so the optimal-scale ratio has no denominator.
class DegenerateDenoiser : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterate left the finite range (or exceeded the blow-up norm).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t iteration, const std::string& what)
        : std::runtime_error(what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// I - M is singular (spectral radius of the affine iteration map too close to 1).
class NoUniqueFixedPoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pnplab
