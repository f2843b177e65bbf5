#include "rlelab/stats.hpp"

#include <cmath>

#include "rlelab/error.hpp"

namespace rlelab {

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

EstimateWithError estimate(std::span<const double> samples, std::uint64_t base_seed) {
    RLELAB_REQUIRE(!samples.empty(), ErrorCode::InvalidArgument, "estimate needs >= 1 sample");
    const double n = static_cast<double>(samples.size());
    const double mean = pairwise_sum(samples) / n;
    EstimateWithError e{mean, 0.0, samples.size(), base_seed};
    if (samples.size() >= 2) {
        std::vector<double> dev(samples.size());
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double d = samples[k] - mean;
            dev[k] = d * d;
        }
        e.std_error = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
    }
    return e;
}

EstimateWithError estimate_linearized(double value, std::span<const double> influence,
                                      std::uint64_t base_seed) {
    auto e = estimate(influence, base_seed);
    e.mean = value;
    return e;
}

double combine_errors(double a, double b) { return std::sqrt(a * a + b * b); }

SlopeFit log_log_slope(std::span<const double> x, std::span<const double> y,
                       std::span<const double> y_se) {
    SlopeFit fit;
    if (x.size() != y.size() || x.size() != y_se.size() || x.size() < 2) return fit;
    std::vector<double> lx, ly, w;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) return fit;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        // sd of log y is se/y; a zero se is floored to keep the weights finite.
        const double sl = std::max(y_se[i] / y[i], 1e-12);
        w.push_back(1.0 / (sl * sl));
    }
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sw += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += w[i] * (lx[i] - mx) * (lx[i] - mx);
        sxy += w[i] * (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) return fit;
    fit.slope = sxy / sxx;
    fit.half_width = 1.959963984540054 * std::sqrt(1.0 / sxx);
    fit.valid = true;
    return fit;
}

std::vector<double> trapezoid_weights(std::span<const double> grid) {
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double d = 0.5 * (grid[j] - grid[j - 1]);
        w[j - 1] += d;
        w[j] += d;
    }
    return w;
}

}  // namespace rlelab
