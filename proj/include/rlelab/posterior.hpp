#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rlelab/gray.hpp"
#include "rlelab/model.hpp"
#include "rlelab/prior.hpp"

namespace rlelab {

// Exact Gibbs quantities of one instance under weight P0(x) exp(-H_{t,h}(x)).
//
// Two-replica averages factorize into products of single-replica ones, so
// only single-replica moments are stored. r_mu denotes [phi (x - s)]_mu and
// the overlap is E(x) = (1/L) sum_i (x_i - s_i) x_i.
struct PosteriorSummary {
    double log_z = 0.0;
    std::vector<double> mean;           // N, <x_i>
    std::vector<double> second_moment;  // N, <x_i^2>
    std::vector<double> marginals;      // L x K, P(section l takes atom k)
    double overlap_mean = 0.0;          // <E>
    double overlap_sq = 0.0;            // <E^2>
    std::vector<double> row_mean;       // rows, <r_mu>
    std::vector<double> row_sq;         // rows, <r_mu^2>
    double section_mmse_term = 0.0;     // ||s - <x>||^2 / L

    // Cross moments for the sub-extensive rows nu = M..M+|S|-1 (index nu - M).
    std::vector<double> sub_cross;       // |S| x N, <r_nu (x_i - s_i)>
    std::vector<double> sub_overlap_r;   // |S|, <E r_nu>
    std::vector<double> sub_overlap_r2;  // |S|, <E r_nu^2>

    std::uint64_t configurations = 0;
};

// Single pass over the support configurations in Gray order with
// incrementally updated row residuals, streaming log-sum-exp and compensated
// accumulators. Throws Error(BudgetExceeded) or Error(NonFiniteEnergy).
PosteriorSummary enumerate_posterior(const Instance& inst, const ModelParams& params,
                                     const Prior& prior,
                                     std::uint64_t budget = kDefaultEnumerationBudget);

}  // namespace rlelab
