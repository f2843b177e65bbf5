#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rlelab/quenched.hpp"
#include "rlelab/reports.hpp"

namespace rlelab {

// di_{t,h}/dt estimated three ways on one CRN plan:
//   direct: (1/2 delta L) sum_nu E<r_nu^2 - r_nu z_nu sqrt(delta/t)>  (needs t > 0)
//   ibp:    (|S| / 2 delta L) Y^(S)_{t,h}                             (any t)
//   fd:     central difference of mutual_info in t, step fd_step, with a
//           step-halving bias bound
struct TDerivative {
    std::optional<EstimateWithError> direct;
    EstimateWithError ibp;
    std::optional<EstimateWithError> finite_difference;
    double fd_bias = 0.0;
    std::vector<RelationReport> reports;  // every pairwise agreement available
};

// fd_step <= 0 disables the finite difference; it is also skipped when
// [t - fd_step, t + fd_step] leaves [0, 1].
TDerivative dt_derivative(const ModelParams& params, const Prior& prior, const SamplingPlan& plan,
                          double fd_step = 0.05, const RunOptions& opts = {},
                          double threshold = kDefaultZThreshold);

struct PathPoint {
    double t = 0.0;
    EstimateWithError i_est;       // i_{t,h}
    EstimateWithError e_est;       // E_{t,h}
    EstimateWithError y_sub_est;   // Y^(S)_{t,h}
    EstimateWithError dt_est;      // (|S| / 2 delta L) Y^(S)_{t,h}
    std::optional<EstimateWithError> dt_direct_est;  // direct Gibbs form, t > 0
};

struct PathIntegral {
    std::vector<PathPoint> points;
    EstimateWithError quadrature;    // trapezoid of dt_est over the grid
    EstimateWithError direct;        // i_{1,h} - i_{0,h}
    EstimateWithError closed_form;   // (|S| / 2L) ln(1 + E_{0,h} / delta)
    double quadrature_bias = 0.0;    // Richardson estimate from the every-other-point grid
    // (i_{1,h} - i_{0,h}) / (|S|/N) next to (B/2) ln(1 + E_{0,h}/delta).
    double rate_ratio_lhs = 0.0;
    double rate_ratio_rhs = 0.0;
    RelationReport quadrature_vs_direct;
    RelationReport closed_form_vs_quadrature;  // asymptotic, diagnostic only
    std::vector<std::string> warnings;
};

std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

// t_grid must be increasing, start at 0 and end at 1.
PathIntegral integrate_path(const ModelParams& params, const Prior& prior,
                            const SamplingPlan& plan, const std::vector<double>& t_grid,
                            const RunOptions& opts = {}, double threshold = kDefaultZThreshold);

}  // namespace rlelab
