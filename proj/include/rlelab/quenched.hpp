#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rlelab/gray.hpp"
#include "rlelab/model.hpp"
#include "rlelab/posterior.hpp"
#include "rlelab/prior.hpp"
#include "rlelab/stats.hpp"

namespace rlelab {

struct SamplingPlan {
    std::size_t n_samples = 1000;
    std::uint64_t base_seed = 1;
    // Estimators with equal tags draw identical instance sequences.
    std::string crn_tag = "default";

    InstanceKey key(std::size_t index) const {
        return {base_seed, hash_tag(crn_tag), static_cast<std::uint64_t>(index)};
    }
    void validate() const;
};

// Execution knobs that never change results.
struct RunOptions {
    std::size_t workers = 0;  // 0: hardware concurrency
    std::uint64_t budget = kDefaultEnumerationBudget;
};

std::size_t resolve_workers(std::size_t requested, std::size_t jobs);

// Runs fn(index) for index in [0, n) on a worker pool and returns the results
// in index order. If any call throws, the exception of the lowest failing
// index is rethrown after all workers finish.
template <class T>
std::vector<T> parallel_map(std::size_t n, std::size_t workers,
                            const std::function<T(std::size_t)>& fn);

// Scalars extracted from one exact posterior. NaN marks observables that are
// undefined for the given parameters (e.g. the t-derivative at t = 0).
struct InstanceObservables {
    double log_z = 0.0;
    double mutual_info = 0.0;       // i_{t,h} sample: constant - ln Z / L
    double mmse = 0.0;              // ||s - <x>||^2 / L
    double meas_mmse = 0.0;         // sum_{mu<M} <r_mu>^2 / M
    double meas_row_sq = 0.0;       // sum_{mu<M} <r_mu^2> / M
    double sub_meas_mmse = 0.0;     // sum_{nu in S} <r_nu>^2 / |S|
    double overlap_mean = 0.0;      // <E>
    double overlap_sq = 0.0;        // <E^2>
    double dt_direct = 0.0;         // (1/2 delta L) sum_nu <r_nu^2 - r_nu z_nu sqrt(delta/t)>
    double dt_ibp = 0.0;            // (1/2 delta L) sum_nu <r_nu>^2
    double nishi_signal = 0.0;      // (1/L) sum_i (<x_i^2> - s_i <x_i>)
    double nishi_replica = 0.0;     // (1/L) sum_i (<x_i^2> - <x_i>^2)
    double row_mean_sq2 = 0.0;      // mean over all rows of 2 <r_mu>^2
    double row_sq_all = 0.0;        // mean over all rows of <r_mu^2>
    double ibp3_lhs = 0.0;          // (1/L) sum_{nu,i} z_nu <U_nu xb_i> <xb_i>
    double ibp3_rhs = 0.0;          // (1/L) sum_{nu,i} (z_nu^2 s_i <xb_i> - sqrt(t/delta) z_nu s_i <r_nu xb_i>)
    double gibbs_cov = 0.0;         // sum_nu <E G_nu> - <E><G_nu>
    double signal_moments[4] = {};  // mean over rows of [phi s]_mu^(2n), n = 1..4
    std::vector<double> rows_mean_sq2;  // per row, 2 <r_mu>^2
    std::vector<double> rows_sq;        // per row, <r_mu^2>
    std::uint64_t instance_hash = 0;
};

// Constant of the mutual information: -(M + |S| + N [h > 0]) / (2L).
double mutual_info_offset(const ModelParams& params);

InstanceObservables observe(const Instance& inst, const ModelParams& params,
                            const PosteriorSummary& post);

// Enumerate and observe one instance under params (which may differ from the
// parameters the instance was drawn with only in delta, t and h).
InstanceObservables observe_instance(const Instance& inst, const ModelParams& params,
                                     const Prior& prior,
                                     std::uint64_t budget = kDefaultEnumerationBudget);

// Draw, enumerate, observe for every index of the plan.
std::vector<InstanceObservables> run_plan(const ModelParams& params, const Prior& prior,
                                          const SamplingPlan& plan, const RunOptions& opts = {});

// Digest over an ordered list of instance hashes.
std::uint64_t combine_hashes(const std::vector<std::uint64_t>& hashes);

// Column of one observable, in sample order.
std::vector<double> column(const std::vector<InstanceObservables>& obs,
                           double InstanceObservables::*field);

EstimateWithError mutual_info(const ModelParams& params, const Prior& prior,
                              const SamplingPlan& plan, const RunOptions& opts = {});
EstimateWithError mmse(const ModelParams& params, const Prior& prior, const SamplingPlan& plan,
                       const RunOptions& opts = {});
EstimateWithError measurement_mmse(const ModelParams& params, const Prior& prior,
                                   const SamplingPlan& plan, const RunOptions& opts = {});
EstimateWithError sub_measurement_mmse(const ModelParams& params, const Prior& prior,
                                       const SamplingPlan& plan, const RunOptions& opts = {});

struct OverlapStats {
    EstimateWithError overlap_mean;  // E<E>
    EstimateWithError fluctuation;   // E<(E - E_{t,h})^2>, plug-in centering
};
OverlapStats overlap_stats(const ModelParams& params, const Prior& prior,
                           const SamplingPlan& plan, const RunOptions& opts = {});
// Same quantity from already computed observables.
OverlapStats overlap_stats(const std::vector<InstanceObservables>& obs, std::uint64_t base_seed);

}  // namespace rlelab

#include "rlelab/detail/parallel_map.hpp"
