#include "rlelab/quenched.hpp"

#include <cmath>
#include <limits>

#include "rlelab/error.hpp"

namespace rlelab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void SamplingPlan::validate() const {
    RLELAB_REQUIRE(n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be >= 1");
}

std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
    std::size_t w = requested;
    if (w == 0) w = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(w, jobs));
}

double mutual_info_offset(const ModelParams& params) {
    double count = static_cast<double>(params.M + params.sub_size());
    if (params.h > 0.0) count += static_cast<double>(params.N());
    return -count / (2.0 * static_cast<double>(params.L));
}

InstanceObservables observe(const Instance& inst, const ModelParams& params,
                            const PosteriorSummary& post) {
    InstanceObservables o;
    const double L = static_cast<double>(inst.L);
    const std::size_t N = inst.N();
    const std::size_t M = inst.M;
    const std::size_t S = inst.sub;
    const std::size_t R = inst.rows();
    const double delta = params.delta;
    const double t = params.t;

    o.log_z = post.log_z;
    o.mutual_info = mutual_info_offset(params) - post.log_z / L;
    o.mmse = post.section_mmse_term;
    o.overlap_mean = post.overlap_mean;
    o.overlap_sq = post.overlap_sq;

    if (M > 0) {
        double a = 0.0, b = 0.0;
        for (std::size_t mu = 0; mu < M; ++mu) {
            a += post.row_mean[mu] * post.row_mean[mu];
            b += post.row_sq[mu];
        }
        o.meas_mmse = a / static_cast<double>(M);
        o.meas_row_sq = b / static_cast<double>(M);
    } else {
        o.meas_mmse = o.meas_row_sq = kNaN;
    }

    double a2 = 0.0, rs = 0.0;
    o.rows_mean_sq2.resize(R);
    o.rows_sq.resize(R);
    for (std::size_t mu = 0; mu < R; ++mu) {
        o.rows_mean_sq2[mu] = 2.0 * post.row_mean[mu] * post.row_mean[mu];
        o.rows_sq[mu] = post.row_sq[mu];
        a2 += o.rows_mean_sq2[mu];
        rs += o.rows_sq[mu];
    }
    o.row_mean_sq2 = R > 0 ? a2 / static_cast<double>(R) : kNaN;
    o.row_sq_all = R > 0 ? rs / static_cast<double>(R) : kNaN;

    double sig = 0.0, rep = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        sig += post.second_moment[i] - inst.s[i] * post.mean[i];
        rep += post.second_moment[i] - post.mean[i] * post.mean[i];
    }
    o.nishi_signal = sig / L;
    o.nishi_replica = rep / L;

    if (S > 0) {
        double ys = 0.0, direct = 0.0;
        for (std::size_t nu = M; nu < R; ++nu) {
            ys += post.row_mean[nu] * post.row_mean[nu];
            direct += post.row_sq[nu] - post.row_mean[nu] * inst.z[nu] * std::sqrt(delta / t);
        }
        o.sub_meas_mmse = ys / static_cast<double>(S);
        o.dt_ibp = ys / (2.0 * delta * L);
        o.dt_direct = t > 0.0 ? direct / (2.0 * delta * L) : kNaN;
    } else {
        o.sub_meas_mmse = o.dt_ibp = o.dt_direct = kNaN;
    }

    if (S > 0 && t > 0.0) {
        const double a = std::sqrt(t / delta);
        double lhs = 0.0, rhs = 0.0, cov = 0.0;
        for (std::size_t nu = 0; nu < S; ++nu) {
            const double z = inst.z[M + nu];
            for (std::size_t i = 0; i < N; ++i) {
                const double xb = post.mean[i] - inst.s[i];
                const double c = post.sub_cross[nu * N + i];
                lhs += z * (a * c - z * xb) * xb;
                rhs += z * z * inst.s[i] * xb - a * z * inst.s[i] * c;
            }
            const double rm = post.row_mean[M + nu];
            const double r2 = post.row_sq[M + nu];
            const double cov_r2 = post.sub_overlap_r2[nu] - post.overlap_mean * r2;
            const double cov_r = post.sub_overlap_r[nu] - post.overlap_mean * rm;
            cov += (cov_r2 - z * std::sqrt(delta / t) * cov_r) / (2.0 * delta);
        }
        o.ibp3_lhs = lhs / L;
        o.ibp3_rhs = rhs / L;
        o.gibbs_cov = cov;
    } else {
        o.ibp3_lhs = o.ibp3_rhs = o.gibbs_cov = kNaN;
    }

    for (std::size_t mu = 0; mu < R; ++mu) {
        const auto row = inst.row(mu);
        double ps = 0.0;
        for (std::size_t i = 0; i < N; ++i) ps += row[i] * inst.s[i];
        double p = 1.0;
        for (int n = 0; n < 4; ++n) {
            p *= ps * ps;
            o.signal_moments[n] += p;
        }
    }
    for (double& m : o.signal_moments) m = R > 0 ? m / static_cast<double>(R) : kNaN;

    o.instance_hash = inst.digest();
    return o;
}

InstanceObservables observe_instance(const Instance& inst, const ModelParams& params,
                                     const Prior& prior, std::uint64_t budget) {
    return observe(inst, params, enumerate_posterior(inst, params, prior, budget));
}

std::vector<InstanceObservables> run_plan(const ModelParams& params, const Prior& prior,
                                          const SamplingPlan& plan, const RunOptions& opts) {
    params.validate_against(prior);
    plan.validate();
    configuration_count(prior.support().size(), params.L, opts.budget);
    return parallel_map<InstanceObservables>(
        plan.n_samples, opts.workers, [&](std::size_t k) {
            const auto inst = sample_instance(params, prior, plan.key(k));
            return observe_instance(inst, params, prior, opts.budget);
        });
}

std::uint64_t combine_hashes(const std::vector<std::uint64_t>& hashes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t v : hashes) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> column(const std::vector<InstanceObservables>& obs,
                           double InstanceObservables::*field) {
    std::vector<double> v;
    v.reserve(obs.size());
    for (const auto& o : obs) v.push_back(o.*field);
    return v;
}

EstimateWithError mutual_info(const ModelParams& params, const Prior& prior,
                              const SamplingPlan& plan, const RunOptions& opts) {
    const auto obs = run_plan(params, prior, plan, opts);
    return estimate(column(obs, &InstanceObservables::mutual_info), plan.base_seed);
}

EstimateWithError mmse(const ModelParams& params, const Prior& prior, const SamplingPlan& plan,
                       const RunOptions& opts) {
    const auto obs = run_plan(params, prior, plan, opts);
    return estimate(column(obs, &InstanceObservables::mmse), plan.base_seed);
}

EstimateWithError measurement_mmse(const ModelParams& params, const Prior& prior,
                                   const SamplingPlan& plan, const RunOptions& opts) {
    RLELAB_REQUIRE(params.M > 0, ErrorCode::InvalidArgument,
                   "measurement MMSE needs at least one base row (M > 0)");
    const auto obs = run_plan(params, prior, plan, opts);
    return estimate(column(obs, &InstanceObservables::meas_mmse), plan.base_seed);
}

EstimateWithError sub_measurement_mmse(const ModelParams& params, const Prior& prior,
                                       const SamplingPlan& plan, const RunOptions& opts) {
    RLELAB_REQUIRE(params.sub_size() > 0, ErrorCode::InvalidArgument,
                   "sub-extensive measurement MMSE needs |S| >= 1");
    const auto obs = run_plan(params, prior, plan, opts);
    return estimate(column(obs, &InstanceObservables::sub_meas_mmse), plan.base_seed);
}

OverlapStats overlap_stats(const std::vector<InstanceObservables>& obs, std::uint64_t base_seed) {
    const auto om = column(obs, &InstanceObservables::overlap_mean);
    const auto osq = column(obs, &InstanceObservables::overlap_sq);
    const auto e = column(obs, &InstanceObservables::mmse);
    const double n = static_cast<double>(obs.size());
    const double mom = pairwise_sum(om) / n;
    const double mosq = pairwise_sum(osq) / n;
    const double me = pairwise_sum(e) / n;

    // E<E^2> - 2 E_{t,h} E<E> + E_{t,h}^2 with E_{t,h} estimated on the same sample.
    const double value = mosq - 2.0 * me * mom + me * me;
    std::vector<double> infl(obs.size());
    for (std::size_t k = 0; k < obs.size(); ++k)
        infl[k] = osq[k] - 2.0 * me * om[k] + (2.0 * me - 2.0 * mom) * e[k];

    OverlapStats out;
    out.overlap_mean = estimate(om, base_seed);
    out.fluctuation = estimate_linearized(value, infl, base_seed);
    return out;
}

OverlapStats overlap_stats(const ModelParams& params, const Prior& prior,
                           const SamplingPlan& plan, const RunOptions& opts) {
    return overlap_stats(run_plan(params, prior, plan, opts), plan.base_seed);
}

}  // namespace rlelab
