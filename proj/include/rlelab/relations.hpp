#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rlelab/quenched.hpp"
#include "rlelab/reports.hpp"

namespace rlelab {

// di_L/d(1/delta) = (alpha B / 2) Y_M, exact at finite L. Base model only
// (t = h = 0). lhs is the central difference in 1/delta on paired instances;
// the bias bound comes from halving fd_step.
RelationReport check_canonical_immse(const ModelParams& params, const Prior& prior,
                                     const SamplingPlan& plan, double fd_step,
                                     const RunOptions& opts = {},
                                     double threshold = kDefaultZThreshold);

// |Y_M - E_L / (1 + E_L / delta)| over the L-grid. Base model only.
ScalingReport check_snr_immse(const Prior& prior, const std::vector<std::size_t>& L_grid,
                              const GridTemplate& tmpl, const SamplingPlan& plan,
                              const RunOptions& opts = {});

struct RelationWithScaling {
    RelationReport relation;  // at the template's own L
    ScalingReport scaling;    // |residual| over the L-grid
};

// (i_{M+dM} - i_M) / (dM / N) against (B/2) ln(1 + E_L / delta) on nested
// instances that share their first M rows. The forward-difference bias bound
// uses the second difference through M + 2 dM.
RelationWithScaling check_alpha_immse(const Prior& prior, const GridTemplate& tmpl,
                                      const std::vector<std::size_t>& L_grid,
                                      const SamplingPlan& plan, std::size_t dM = 1,
                                      const RunOptions& opts = {},
                                      double threshold = kDefaultZThreshold);

struct LogIdentityResult {
    RelationReport relation;      // at the template's own L
    ScalingReport scaling;        // |residual| over the L-grid
    RelationReport alpha;         // the alpha I-MMSE report from the same instances
    RelationReport canonical;     // the canonical I-MMSE report from the same instances
};

// (2 / alpha B) di/d ln(1/delta) = 1 - exp(-(2/B) di/dalpha), both sides
// from finite differences on one CRN plan.
LogIdentityResult check_log_identity(const Prior& prior, const GridTemplate& tmpl,
                                     const std::vector<std::size_t>& L_grid,
                                     const SamplingPlan& plan, double fd_step,
                                     std::size_t dM = 1, const RunOptions& opts = {},
                                     double threshold = kDefaultZThreshold);

// |Y^(S)_{t,h} - E_{t,h} / (1 + E_{t,h} t / delta)| over the L-grid, one
// report per t value.
std::vector<ScalingReport> check_lemma_mmse_relation(const Prior& prior, const GridTemplate& tmpl,
                                                     const std::vector<std::size_t>& L_grid,
                                                     const std::vector<double>& t_values,
                                                     const SamplingPlan& plan,
                                                     const RunOptions& opts = {});

// |E_{1,h} - E_{0,h}| over the L-grid on paired instances. Notes carry the
// Gibbs covariance sum_nu E[<E G_nu> - <E><G_nu>] at t = 0.5 and t = 1.
ScalingReport check_mmse_variation(const Prior& prior, const GridTemplate& tmpl,
                                   const std::vector<std::size_t>& L_grid,
                                   const SamplingPlan& plan, const RunOptions& opts = {});

// Exact-in-expectation identities evaluated on one plan:
//   nishimori_signal_replica:  E<(1/L) sum (X_i - S_i) X_i> = E<(1/L) sum (X_i - X'_i) X_i>
//   nishimori_rows:            2 E<r_mu>^2 = E<r_mu^2>, averaged over rows
//   overlap_mmse:              E<E> = E_{t,h}
//   nishimori_ibp:             the Z_nu U_nu X_i X'_i identity (needs t > 0, |S| >= 1)
std::vector<RelationReport> nishimori_suite(const ModelParams& params, const Prior& prior,
                                            const SamplingPlan& plan, const RunOptions& opts = {},
                                            double threshold = kDefaultZThreshold,
                                            bool include_ibp = true);

struct HWindow {
    double lo = 0.05;
    double hi = 0.5;
    std::size_t points = 5;
};

// Trapezoid over the h window of E<(E - E_{0,h})^2>, over the L-grid.
ScalingReport concentration_scan(const Prior& prior, const GridTemplate& tmpl,
                                 const std::vector<std::size_t>& L_grid, const HWindow& window,
                                 const SamplingPlan& plan, const RunOptions& opts = {});

// E[[phi s]_mu^(2n)] against the Gaussian envelope (2n-1)!! (B s_max^2)^n.
struct MomentCheck {
    int order = 0;  // n
    EstimateWithError moment;
    double envelope = 0.0;
    bool within = false;  // moment.mean <= envelope + 4 se
};
std::vector<MomentCheck> signal_moment_envelope(const ModelParams& params, const Prior& prior,
                                                const SamplingPlan& plan,
                                                const RunOptions& opts = {});

}  // namespace rlelab
