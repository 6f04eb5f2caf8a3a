#pragma once

#include <stdexcept>
#include <string>

namespace hth {

// Raised when a numerical routine cannot reach its accuracy target or
// produces a non-finite result. Carries the tolerance that was achieved.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double achieved_tolerance = 0.0)
        : std::runtime_error(what), achieved_tolerance_(achieved_tolerance) {}

    double achieved_tolerance() const noexcept { return achieved_tolerance_; }

private:
    double achieved_tolerance_;
};

// The truncation region carries negligible probability mass.
class DegenerateTruncation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace hth
