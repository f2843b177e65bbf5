#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rlelab/error.hpp"
#include "rlelab/quenched.hpp"
#include "rlelab/reports.hpp"

namespace rlelab::detail {

// Draws instance k of the plan under `draw` and maps it through fn, in
// parallel, results in index order.
template <class T>
std::vector<T> per_instance(const ModelParams& draw, const Prior& prior, const SamplingPlan& plan,
                            const RunOptions& opts,
                            const std::function<T(const Instance&)>& fn) {
    draw.validate_against(prior);
    plan.validate();
    configuration_count(prior.support().size(), draw.L, opts.budget);
    return parallel_map<T>(plan.n_samples, opts.workers, [&](std::size_t k) {
        return fn(sample_instance(draw, prior, plan.key(k)));
    });
}

inline ModelParams with_t_h(ModelParams p, double t, double h) {
    p.t = t;
    p.h = h;
    return p;
}

inline ModelParams with_delta(ModelParams p, double delta) {
    p.delta = delta;
    return p;
}

inline double mean_of(const std::vector<double>& v) {
    return pairwise_sum(v) / static_cast<double>(v.size());
}

// Central differences of paired samples at steps d and d/2 with the
// step-halving bias bound (4/3)|D_d - D_{d/2}|.
struct CentralDifference {
    std::vector<double> samples;  // per instance D_d
    double bias = 0.0;
};

inline CentralDifference central_difference(const std::vector<double>& plus,
                                            const std::vector<double>& minus,
                                            const std::vector<double>& plus_half,
                                            const std::vector<double>& minus_half, double step) {
    CentralDifference cd;
    const std::size_t n = plus.size();
    cd.samples.resize(n);
    std::vector<double> gap(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double full = (plus[k] - minus[k]) / (2.0 * step);
        const double half = (plus_half[k] - minus_half[k]) / step;
        cd.samples[k] = full;
        gap[k] = full - half;
    }
    cd.bias = 4.0 / 3.0 * std::abs(mean_of(gap));
    return cd;
}

template <class T>
std::uint64_t digest_of(const std::vector<T>& rows, std::uint64_t T::*field) {
    std::vector<std::uint64_t> h;
    h.reserve(rows.size());
    for (const auto& r : rows) h.push_back(r.*field);
    return combine_hashes(h);
}

template <class T>
std::vector<double> field_of(const std::vector<T>& rows, double T::*field) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r.*field);
    return v;
}

}  // namespace rlelab::detail
