#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rlelab {

struct EstimateWithError {
    double mean = 0.0;
    double std_error = 0.0;  // sample sd / sqrt(n); 0 when n < 2
    std::size_t n_samples = 0;
    std::uint64_t base_seed = 0;
};

// Balanced pairwise sum in index order; the result does not depend on how
// the inputs were produced.
double pairwise_sum(std::span<const double> v);

// Mean and standard error of iid samples.
EstimateWithError estimate(std::span<const double> samples, std::uint64_t base_seed = 0);

// Estimate of a smooth function of sample means: `value` is the plug-in
// value and `influence` the per-sample linearization (delta method).
EstimateWithError estimate_linearized(double value, std::span<const double> influence,
                                      std::uint64_t base_seed = 0);

// sqrt(a^2 + b^2)
double combine_errors(double a, double b);

// Weighted least-squares slope of log(y) against log(x), with weights from
// the standard errors of y. Returns {slope, half-width of 95% interval}.
struct SlopeFit {
    double slope = 0.0;
    double half_width = 0.0;
    bool valid = false;
};
SlopeFit log_log_slope(std::span<const double> x, std::span<const double> y,
                       std::span<const double> y_se);

// Trapezoidal weights for a (possibly non-uniform) grid.
std::vector<double> trapezoid_weights(std::span<const double> grid);

}  // namespace rlelab
