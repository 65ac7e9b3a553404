#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tissuemix::losses {

/// Outcome of comparing one analytic gradient to central differences.
struct GradCheckResult {
    std::string name;
    int trials = 0;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;

/// Relative error |a - n| / max(|a|, |n|, 1e-8).
double relative_error(double analytic, double numeric);

/// Infinity-norm version over a whole gradient:
/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, 1e-8).
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Checks every analytic loss gradient against central finite differences of
/// the forward losses on `trials` random inputs each.
std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed = 0, int trials = 100,
                                                 double step = kGradCheckStep,
                                                 double tolerance = kGradCheckTolerance);

}  // namespace tissuemix::losses
