#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace switchheat {

/// Invalid construction parameters or malformed configuration.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A file could not be read or written.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iteration failed to reach its tolerance. Carries the residual history
/// so callers can see how the iteration was behaving when it gave up.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, std::vector<double> residuals)
        : std::runtime_error(what), residuals_(std::move(residuals)) {}

    [[nodiscard]] const std::vector<double>& residuals() const { return residuals_; }

private:
    std::vector<double> residuals_;
};

/// A statistical acceptance check failed (used by the verify driver to pick
/// its exit code; individual estimators report rather than throw).
struct stat_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace switchheat
