#include "rlelab/relations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "orchestrate.hpp"
#include "rlelab/error.hpp"

namespace rlelab {

// ---- reports ---------------------------------------------------------------

RelationReport make_relation_report(std::string name, const EstimateWithError& lhs,
                                    const EstimateWithError& rhs, double bias_bound,
                                    const ModelParams& params, const SamplingPlan& plan,
                                    double threshold) {
    RelationReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.bias_bound = bias_bound;
    r.threshold = threshold;
    r.params = params;
    r.plan = plan;
    finalize(r);
    return r;
}

void finalize(RelationReport& r) {
    r.residual = r.lhs.mean - r.rhs.mean;
    r.combined_error = combine_errors(r.lhs.std_error, r.rhs.std_error) + r.bias_bound;
    if (r.residual == 0.0)
        r.z_score = 0.0;
    else if (r.combined_error > 0.0)
        r.z_score = r.residual / r.combined_error;
    else
        r.z_score = std::copysign(std::numeric_limits<double>::infinity(), r.residual);
    r.pass = std::abs(r.z_score) <= r.threshold;
}

void finalize(ScalingReport& r) {
    std::vector<double> x, y, se;
    for (const auto& p : r.points) {
        x.push_back(static_cast<double>(p.L));
        y.push_back(p.residual.mean);
        se.push_back(p.residual.std_error);
    }
    const auto fit = log_log_slope(x, y, se);
    r.slope_valid = fit.valid;
    r.slope = fit.valid ? fit.slope : 0.0;
    r.slope_lo = fit.valid ? fit.slope - fit.half_width : 0.0;
    r.slope_hi = fit.valid ? fit.slope + fit.half_width : 0.0;

    r.monotone = !r.points.empty();
    for (std::size_t k = 1; k < r.points.size(); ++k) {
        const double tol = 2.0 * combine_errors(se[k - 1], se[k]);
        if (!(y[k] <= y[k - 1] + tol)) r.monotone = false;
    }
    r.pass = r.monotone || (r.slope_valid && r.slope_hi < 0.0);
    r.final_over_initial = (!y.empty() && y.front() > 0.0) ? y.back() / y.front() : 0.0;
}

ModelParams GridTemplate::at(std::size_t L) const {
    ModelParams p = params;
    p.L = L;
    p.M = static_cast<std::size_t>(
        std::llround(alpha * static_cast<double>(L) * static_cast<double>(p.B)));
    return p;
}

void validate_grid(const std::vector<std::size_t>& L_grid) {
    RLELAB_REQUIRE(L_grid.size() >= 3, ErrorCode::InvalidArgument,
                   "an L-grid needs at least 3 points");
    for (std::size_t k = 0; k < L_grid.size(); ++k) {
        RLELAB_REQUIRE(L_grid[k] >= 1, ErrorCode::InvalidArgument, "L-grid entries must be >= 1");
        if (k > 0)
            RLELAB_REQUIRE(L_grid[k] > L_grid[k - 1], ErrorCode::InvalidArgument,
                           "L-grid must be strictly increasing");
    }
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

EstimateWithError scaled(const std::vector<double>& v, double c, std::uint64_t seed) {
    std::vector<double> w(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) w[k] = c * v[k];
    return estimate(w, seed);
}

// lhs_mean - rhs_value with per-sample influence; the scaling point stores
// its magnitude.
EstimateWithError residual_magnitude(double value, const std::vector<double>& influence,
                                     std::uint64_t seed) {
    auto e = estimate_linearized(value, influence, seed);
    e.mean = std::abs(e.mean);
    return e;
}

ScalingReport start_scaling(std::string name, const std::vector<std::size_t>& L_grid,
                            const SamplingPlan& plan) {
    validate_grid(L_grid);
    ScalingReport r;
    r.name = std::move(name);
    r.L_grid = L_grid;
    r.plan = plan;
    return r;
}

ModelParams base_model(ModelParams p) {
    p.t = 0.0;
    p.h = 0.0;
    p.sub_set_size = 0;
    return p;
}

// ---- alpha and log identity -----------------------------------------------

struct NestedRow {
    // At M, 1/delta +- step and +- step/2 (only filled with a step).
    double plus = 0.0, minus = 0.0, plus_half = 0.0, minus_half = 0.0;
    double i0 = 0.0, i1 = 0.0, i2 = 0.0;  // at M, M + dM, M + 2 dM
    double e0 = 0.0;                      // E at M
    double y0 = 0.0;                      // Y_M at M
    std::uint64_t hash = 0;
};

std::vector<NestedRow> nested_rows(const ModelParams& p, const Prior& prior,
                                   const SamplingPlan& plan, std::size_t dM, double fd_step,
                                   const RunOptions& opts) {
    ModelParams p1 = p, p2 = p;
    p1.M = p.M + dM;
    p2.M = p.M + 2 * dM;
    const double lambda = 1.0 / p.delta;
    return detail::per_instance<NestedRow>(p, prior, plan, opts, [&](const Instance& inst) {
        NestedRow r;
        const auto o0 = observe_instance(inst, p, prior, opts.budget);
        r.i0 = o0.mutual_info;
        r.e0 = o0.mmse;
        r.y0 = o0.meas_mmse;
        r.hash = o0.instance_hash;
        r.i1 = observe_instance(sample_instance(p1, prior, inst.key), p1, prior, opts.budget)
                   .mutual_info;
        r.i2 = observe_instance(sample_instance(p2, prior, inst.key), p2, prior, opts.budget)
                   .mutual_info;
        if (fd_step > 0.0) {
            auto at = [&](double lam) {
                return observe_instance(inst, detail::with_delta(p, 1.0 / lam), prior,
                                        opts.budget)
                    .mutual_info;
            };
            r.plus = at(lambda + fd_step);
            r.minus = at(lambda - fd_step);
            r.plus_half = at(lambda + 0.5 * fd_step);
            r.minus_half = at(lambda - 0.5 * fd_step);
        }
        return r;
    });
}

struct AlphaParts {
    EstimateWithError lhs, rhs;
    double bias = 0.0;
    double g_mean = 0.0;              // mean forward difference in alpha
    std::vector<double> g;            // per instance forward difference
    double rhs_slope = 0.0;           // d rhs / d E at the mean
    std::vector<double> e0;
};

AlphaParts alpha_parts(const std::vector<NestedRow>& rows, const ModelParams& p, std::size_t dM,
                       std::uint64_t seed) {
    AlphaParts a;
    const double scale = static_cast<double>(p.N()) / static_cast<double>(dM);
    const std::size_t n = rows.size();
    a.g.resize(n);
    a.e0.resize(n);
    std::vector<double> second(n);
    for (std::size_t k = 0; k < n; ++k) {
        a.g[k] = (rows[k].i1 - rows[k].i0) * scale;
        second[k] = rows[k].i2 - 2.0 * rows[k].i1 + rows[k].i0;
        a.e0[k] = rows[k].e0;
    }
    a.lhs = estimate(a.g, seed);
    a.g_mean = a.lhs.mean;
    // Forward difference bias (step / 2) |f''| with f'' from the second difference.
    a.bias = 0.5 * scale * std::abs(detail::mean_of(second));

    const double B = static_cast<double>(p.B);
    const double em = detail::mean_of(a.e0);
    a.rhs_slope = 0.5 * B / (p.delta + em);
    std::vector<double> infl(n);
    for (std::size_t k = 0; k < n; ++k) infl[k] = a.rhs_slope * a.e0[k];
    a.rhs = estimate_linearized(0.5 * B * std::log1p(em / p.delta), infl, seed);
    return a;
}

ScalingPoint alpha_point(const AlphaParts& a, const ModelParams& p, std::uint64_t seed) {
    std::vector<double> infl(a.g.size());
    for (std::size_t k = 0; k < infl.size(); ++k) infl[k] = a.g[k] - a.rhs_slope * a.e0[k];
    ScalingPoint sp;
    sp.L = p.L;
    sp.params = p;
    sp.lhs = a.lhs;
    sp.rhs = a.rhs;
    sp.residual = residual_magnitude(a.lhs.mean - a.rhs.mean, infl, seed);
    return sp;
}

struct LogParts {
    EstimateWithError lhs, rhs;
    double bias = 0.0;
    std::vector<double> lhs_samples, rhs_infl;
    RelationReport canonical;
};

LogParts log_parts(const std::vector<NestedRow>& rows, const AlphaParts& a, const ModelParams& p,
                   const SamplingPlan& plan, double fd_step, double threshold) {
    LogParts lp;
    const std::uint64_t seed = plan.base_seed;
    const auto cd = detail::central_difference(
        detail::field_of(rows, &NestedRow::plus), detail::field_of(rows, &NestedRow::minus),
        detail::field_of(rows, &NestedRow::plus_half),
        detail::field_of(rows, &NestedRow::minus_half), fd_step);

    const double L = static_cast<double>(p.L);
    const double M = static_cast<double>(p.M);
    const double lambda = 1.0 / p.delta;
    lp.canonical = make_relation_report(
        "canonical_immse", estimate(cd.samples, seed),
        scaled(detail::field_of(rows, &NestedRow::y0), M / (2.0 * L), seed), cd.bias, p, plan,
        threshold);
    lp.canonical.instance_digest = detail::digest_of(rows, &NestedRow::hash);

    // (2 / alpha B) lambda di/dlambda, alpha B = M / L.
    const double c = 2.0 * L / M * lambda;
    lp.lhs_samples.resize(cd.samples.size());
    for (std::size_t k = 0; k < cd.samples.size(); ++k) lp.lhs_samples[k] = c * cd.samples[k];
    lp.lhs = estimate(lp.lhs_samples, seed);

    const double B = static_cast<double>(p.B);
    const double ex = std::exp(-2.0 * a.g_mean / B);
    const double slope = 2.0 / B * ex;
    lp.rhs_infl.resize(a.g.size());
    for (std::size_t k = 0; k < a.g.size(); ++k) lp.rhs_infl[k] = slope * a.g[k];
    lp.rhs = estimate_linearized(1.0 - ex, lp.rhs_infl, seed);
    lp.bias = c * cd.bias + slope * a.bias;
    return lp;
}

}  // namespace

// ---- exact finite-L identities ---------------------------------------------

RelationReport check_canonical_immse(const ModelParams& params, const Prior& prior,
                                     const SamplingPlan& plan, double fd_step,
                                     const RunOptions& opts, double threshold) {
    RLELAB_REQUIRE(params.t == 0.0 && params.h == 0.0, ErrorCode::InvalidArgument,
                   "the canonical I-MMSE check needs the base model (t = 0, h = 0)");
    RLELAB_REQUIRE(fd_step > 0.0, ErrorCode::InvalidArgument, "fd_step must be > 0");
    RLELAB_REQUIRE(params.M > 0, ErrorCode::InvalidArgument,
                   "the canonical I-MMSE check needs M > 0");
    const double lambda = 1.0 / params.delta;
    RLELAB_REQUIRE(lambda - fd_step > 0.0, ErrorCode::InvalidArgument,
                   "1/delta - fd_step must be > 0");

    struct Row {
        double plus, minus, plus_half, minus_half, y;
        std::uint64_t hash;
    };
    const auto rows = detail::per_instance<Row>(params, prior, plan, opts, [&](const Instance& inst) {
        auto at = [&](double lam) {
            return observe_instance(inst, detail::with_delta(params, 1.0 / lam), prior, opts.budget)
                .mutual_info;
        };
        const auto o = observe_instance(inst, params, prior, opts.budget);
        return Row{at(lambda + fd_step), at(lambda - fd_step), at(lambda + 0.5 * fd_step),
                   at(lambda - 0.5 * fd_step), o.meas_mmse, o.instance_hash};
    });
    const auto cd = detail::central_difference(
        detail::field_of(rows, &Row::plus), detail::field_of(rows, &Row::minus),
        detail::field_of(rows, &Row::plus_half), detail::field_of(rows, &Row::minus_half),
        fd_step);
    const double c = static_cast<double>(params.M) / (2.0 * static_cast<double>(params.L));
    auto r = make_relation_report("canonical_immse", estimate(cd.samples, plan.base_seed),
                                  scaled(detail::field_of(rows, &Row::y), c, plan.base_seed),
                                  cd.bias, params, plan, threshold);
    r.instance_digest = detail::digest_of(rows, &Row::hash);
    r.notes.push_back("fd_step " + fmt(fd_step) + " in 1/delta, bias bound " + fmt(cd.bias));
    return r;
}

std::vector<RelationReport> nishimori_suite(const ModelParams& params, const Prior& prior,
                                            const SamplingPlan& plan, const RunOptions& opts,
                                            double threshold, bool include_ibp) {
    if (include_ibp)
        RLELAB_REQUIRE(params.t > 0.0 && params.sub_size() >= 1, ErrorCode::InvalidArgument,
                       "the integration-by-parts Nishimori identity needs t > 0 and |S| >= 1");
    const auto obs = run_plan(params, prior, plan, opts);
    const std::uint64_t seed = plan.base_seed;
    std::vector<std::uint64_t> hashes;
    for (const auto& o : obs) hashes.push_back(o.instance_hash);
    const std::uint64_t digest = combine_hashes(hashes);

    std::vector<RelationReport> out;
    auto add = [&](std::string name, double InstanceObservables::*l,
                   double InstanceObservables::*r) {
        auto rep = make_relation_report(std::move(name), estimate(column(obs, l), seed),
                                        estimate(column(obs, r), seed), 0.0, params, plan,
                                        threshold);
        rep.instance_digest = digest;
        out.push_back(std::move(rep));
    };
    add("nishimori_signal_replica", &InstanceObservables::nishi_signal,
        &InstanceObservables::nishi_replica);
    add("nishimori_rows", &InstanceObservables::row_mean_sq2, &InstanceObservables::row_sq_all);
    {
        const std::size_t R = params.rows();
        double worst = 0.0;
        for (std::size_t mu = 0; mu < R; ++mu) {
            std::vector<double> a, b;
            for (const auto& o : obs) {
                a.push_back(o.rows_mean_sq2[mu]);
                b.push_back(o.rows_sq[mu]);
            }
            const auto ea = estimate(a, seed), eb = estimate(b, seed);
            const double err = combine_errors(ea.std_error, eb.std_error);
            const double d = ea.mean - eb.mean;
            const double z = d == 0.0 ? 0.0 : d / err;
            worst = std::max(worst, std::abs(z));
            out.back().notes.push_back("row " + std::to_string(mu) + ": z " + fmt(z));
        }
        out.back().notes.push_back("max per-row |z| " + fmt(worst));
    }
    add("overlap_mmse", &InstanceObservables::overlap_mean, &InstanceObservables::mmse);
    if (include_ibp)
        add("nishimori_ibp", &InstanceObservables::ibp3_lhs, &InstanceObservables::ibp3_rhs);
    return out;
}

// ---- L-grid scaling checks --------------------------------------------------

ScalingReport check_snr_immse(const Prior& prior, const std::vector<std::size_t>& L_grid,
                              const GridTemplate& tmpl, const SamplingPlan& plan,
                              const RunOptions& opts) {
    RLELAB_REQUIRE(tmpl.params.t == 0.0 && tmpl.params.h == 0.0, ErrorCode::InvalidArgument,
                   "the snr I-MMSE check needs the base model (t = 0, h = 0)");
    auto rep = start_scaling("snr_immse", L_grid, plan);
    const std::uint64_t seed = plan.base_seed;
    std::vector<std::uint64_t> digests;
    for (std::size_t L : L_grid) {
        const ModelParams p = tmpl.at(L);
        RLELAB_REQUIRE(p.M > 0, ErrorCode::InvalidArgument, "the snr I-MMSE check needs M > 0");
        const auto obs = run_plan(p, prior, plan, opts);
        const auto y = column(obs, &InstanceObservables::meas_mmse);
        const auto e = column(obs, &InstanceObservables::mmse);
        const double em = detail::mean_of(e);
        const double q = 1.0 + em / p.delta;
        const double slope = 1.0 / (q * q);
        std::vector<double> rhs_infl(e.size()), res_infl(e.size());
        for (std::size_t k = 0; k < e.size(); ++k) {
            rhs_infl[k] = slope * e[k];
            res_infl[k] = y[k] - slope * e[k];
        }
        ScalingPoint sp;
        sp.L = L;
        sp.params = p;
        sp.lhs = estimate(y, seed);
        sp.rhs = estimate_linearized(em / q, rhs_infl, seed);
        sp.residual = residual_magnitude(sp.lhs.mean - sp.rhs.mean, res_infl, seed);
        rep.points.push_back(sp);
        std::vector<std::uint64_t> h;
        for (const auto& o : obs) h.push_back(o.instance_hash);
        digests.push_back(combine_hashes(h));
    }
    rep.instance_digest = combine_hashes(digests);
    finalize(rep);
    return rep;
}

RelationWithScaling check_alpha_immse(const Prior& prior, const GridTemplate& tmpl,
                                      const std::vector<std::size_t>& L_grid,
                                      const SamplingPlan& plan, std::size_t dM,
                                      const RunOptions& opts, double threshold) {
    RLELAB_REQUIRE(dM >= 1, ErrorCode::InvalidArgument, "dM must be >= 1");
    RelationWithScaling out;
    out.scaling = start_scaling("alpha_immse", L_grid, plan);
    const std::uint64_t seed = plan.base_seed;

    std::map<std::size_t, std::pair<ModelParams, std::vector<NestedRow>>> runs;
    auto run_at = [&](std::size_t L) -> const std::pair<ModelParams, std::vector<NestedRow>>& {
        auto it = runs.find(L);
        if (it != runs.end()) return it->second;
        const ModelParams p = base_model(tmpl.at(L));
        return runs.emplace(L, std::make_pair(p, nested_rows(p, prior, plan, dM, 0.0, opts)))
            .first->second;
    };

    std::vector<std::uint64_t> digests;
    for (std::size_t L : L_grid) {
        const auto& [p, rows] = run_at(L);
        const auto a = alpha_parts(rows, p, dM, seed);
        out.scaling.points.push_back(alpha_point(a, p, seed));
        digests.push_back(detail::digest_of(rows, &NestedRow::hash));
    }
    out.scaling.instance_digest = combine_hashes(digests);
    out.scaling.notes.push_back("finite-difference bias and the o_L(1) term are reported jointly");
    finalize(out.scaling);

    const auto& [p, rows] = run_at(tmpl.params.L);
    const auto a = alpha_parts(rows, p, dM, seed);
    out.relation = make_relation_report("alpha_immse", a.lhs, a.rhs, a.bias, p, plan, threshold);
    out.relation.instance_digest = detail::digest_of(rows, &NestedRow::hash);
    out.relation.notes.push_back("nested instances M, M+" + std::to_string(dM) + ", M+" +
                                 std::to_string(2 * dM) + " on the base model with S empty");
    return out;
}

LogIdentityResult check_log_identity(const Prior& prior, const GridTemplate& tmpl,
                                     const std::vector<std::size_t>& L_grid,
                                     const SamplingPlan& plan, double fd_step, std::size_t dM,
                                     const RunOptions& opts, double threshold) {
    RLELAB_REQUIRE(dM >= 1, ErrorCode::InvalidArgument, "dM must be >= 1");
    RLELAB_REQUIRE(fd_step > 0.0, ErrorCode::InvalidArgument, "fd_step must be > 0");
    RLELAB_REQUIRE(1.0 / tmpl.params.delta - fd_step > 0.0, ErrorCode::InvalidArgument,
                   "1/delta - fd_step must be > 0");
    LogIdentityResult out;
    out.scaling = start_scaling("log_identity", L_grid, plan);
    const std::uint64_t seed = plan.base_seed;

    std::map<std::size_t, std::pair<ModelParams, std::vector<NestedRow>>> runs;
    auto run_at = [&](std::size_t L) -> const std::pair<ModelParams, std::vector<NestedRow>>& {
        auto it = runs.find(L);
        if (it != runs.end()) return it->second;
        const ModelParams p = base_model(tmpl.at(L));
        RLELAB_REQUIRE(p.M > 0, ErrorCode::InvalidArgument, "the log identity needs M > 0");
        return runs.emplace(L, std::make_pair(p, nested_rows(p, prior, plan, dM, fd_step, opts)))
            .first->second;
    };

    std::vector<std::uint64_t> digests;
    for (std::size_t L : L_grid) {
        const auto& [p, rows] = run_at(L);
        const auto a = alpha_parts(rows, p, dM, seed);
        const auto lp = log_parts(rows, a, p, plan, fd_step, threshold);
        std::vector<double> infl(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k)
            infl[k] = lp.lhs_samples[k] - lp.rhs_infl[k];
        ScalingPoint sp;
        sp.L = L;
        sp.params = p;
        sp.lhs = lp.lhs;
        sp.rhs = lp.rhs;
        sp.residual = residual_magnitude(lp.lhs.mean - lp.rhs.mean, infl, seed);
        out.scaling.points.push_back(sp);
        digests.push_back(detail::digest_of(rows, &NestedRow::hash));
    }
    out.scaling.instance_digest = combine_hashes(digests);
    finalize(out.scaling);

    const auto& [p, rows] = run_at(tmpl.params.L);
    const std::uint64_t digest = detail::digest_of(rows, &NestedRow::hash);
    const auto a = alpha_parts(rows, p, dM, seed);
    auto lp = log_parts(rows, a, p, plan, fd_step, threshold);
    out.relation = make_relation_report("log_identity", lp.lhs, lp.rhs, lp.bias, p, plan, threshold);
    out.relation.instance_digest = digest;
    out.alpha = make_relation_report("alpha_immse", a.lhs, a.rhs, a.bias, p, plan, threshold);
    out.alpha.instance_digest = digest;
    out.canonical = std::move(lp.canonical);
    return out;
}

std::vector<ScalingReport> check_lemma_mmse_relation(const Prior& prior, const GridTemplate& tmpl,
                                                     const std::vector<std::size_t>& L_grid,
                                                     const std::vector<double>& t_values,
                                                     const SamplingPlan& plan,
                                                     const RunOptions& opts) {
    RLELAB_REQUIRE(tmpl.params.h > 0.0, ErrorCode::InvalidArgument,
                   "the MMSE relation on the interpolation path needs h > 0");
    RLELAB_REQUIRE(!t_values.empty(), ErrorCode::InvalidArgument, "no t values requested");
    for (double t : t_values)
        RLELAB_REQUIRE(t >= 0.0 && t <= 1.0, ErrorCode::InvalidArgument, "t must lie in [0, 1]");
    validate_grid(L_grid);

    std::vector<ScalingReport> out;
    for (double t : t_values) out.push_back(start_scaling("lemma_mmse_relation_t" + fmt(t), L_grid, plan));
    const std::uint64_t seed = plan.base_seed;
    const std::size_t T = t_values.size();

    struct Row {
        std::vector<double> ys, e;
        std::uint64_t hash = 0;
    };
    std::vector<std::uint64_t> digests;
    for (std::size_t L : L_grid) {
        const ModelParams p = tmpl.at(L);
        RLELAB_REQUIRE(p.sub_size() >= 1, ErrorCode::InvalidArgument,
                       "the MMSE relation on the interpolation path needs |S| >= 1");
        const auto rows = detail::per_instance<Row>(p, prior, plan, opts, [&](const Instance& inst) {
            Row r;
            for (double t : t_values) {
                const auto o =
                    observe_instance(inst, detail::with_t_h(p, t, p.h), prior, opts.budget);
                r.ys.push_back(o.sub_meas_mmse);
                r.e.push_back(o.mmse);
                r.hash = o.instance_hash;
            }
            return r;
        });
        digests.push_back(detail::digest_of(rows, &Row::hash));
        for (std::size_t j = 0; j < T; ++j) {
            const double t = t_values[j];
            std::vector<double> ys, e;
            for (const auto& r : rows) {
                ys.push_back(r.ys[j]);
                e.push_back(r.e[j]);
            }
            const double em = detail::mean_of(e);
            const double q = 1.0 + em * t / p.delta;
            const double slope = 1.0 / (q * q);
            std::vector<double> rhs_infl(e.size()), res_infl(e.size());
            for (std::size_t k = 0; k < e.size(); ++k) {
                rhs_infl[k] = slope * e[k];
                res_infl[k] = ys[k] - slope * e[k];
            }
            ScalingPoint sp;
            sp.L = L;
            sp.params = detail::with_t_h(p, t, p.h);
            sp.lhs = estimate(ys, seed);
            sp.rhs = estimate_linearized(em / q, rhs_infl, seed);
            sp.residual = residual_magnitude(sp.lhs.mean - sp.rhs.mean, res_infl, seed);
            out[j].points.push_back(sp);
        }
    }
    for (auto& r : out) {
        r.instance_digest = combine_hashes(digests);
        finalize(r);
    }
    return out;
}

ScalingReport check_mmse_variation(const Prior& prior, const GridTemplate& tmpl,
                                   const std::vector<std::size_t>& L_grid,
                                   const SamplingPlan& plan, const RunOptions& opts) {
    RLELAB_REQUIRE(tmpl.params.h > 0.0, ErrorCode::InvalidArgument,
                   "the MMSE variation check needs h > 0");
    auto rep = start_scaling("mmse_variation", L_grid, plan);
    if (!(tmpl.params.u > 0.0 && tmpl.params.u < 0.05))
        rep.notes.push_back("warning: u = " + fmt(tmpl.params.u) + " lies outside (0, 1/20)");
    const std::uint64_t seed = plan.base_seed;

    struct Row {
        double e0, e1, cov_half, cov_one;
        std::uint64_t hash;
    };
    std::vector<std::uint64_t> digests;
    for (std::size_t L : L_grid) {
        const ModelParams p = tmpl.at(L);
        RLELAB_REQUIRE(p.sub_size() >= 1, ErrorCode::InvalidArgument,
                       "the MMSE variation check needs |S| >= 1");
        const auto rows = detail::per_instance<Row>(p, prior, plan, opts, [&](const Instance& inst) {
            auto at = [&](double t) {
                return observe_instance(inst, detail::with_t_h(p, t, p.h), prior, opts.budget);
            };
            const auto o0 = at(0.0);
            const auto oh = at(0.5);
            const auto o1 = at(1.0);
            return Row{o0.mmse, o1.mmse, oh.gibbs_cov, o1.gibbs_cov, o0.instance_hash};
        });
        digests.push_back(detail::digest_of(rows, &Row::hash));
        std::vector<double> diff;
        for (const auto& r : rows) diff.push_back(r.e1 - r.e0);
        const auto d = estimate(diff, seed);
        ScalingPoint sp;
        sp.L = L;
        sp.params = p;
        sp.lhs = estimate(detail::field_of(rows, &Row::e1), seed);
        sp.rhs = estimate(detail::field_of(rows, &Row::e0), seed);
        sp.residual = residual_magnitude(d.mean, diff, seed);
        rep.points.push_back(sp);
        const auto ch = estimate(detail::field_of(rows, &Row::cov_half), seed);
        const auto c1 = estimate(detail::field_of(rows, &Row::cov_one), seed);
        rep.notes.push_back("L " + std::to_string(L) + ": Gibbs covariance at t=0.5 " +
                            fmt(ch.mean) + " (se " + fmt(ch.std_error) + "), at t=1 " +
                            fmt(c1.mean) + " (se " + fmt(c1.std_error) + ")");
    }
    rep.instance_digest = combine_hashes(digests);
    finalize(rep);
    return rep;
}

ScalingReport concentration_scan(const Prior& prior, const GridTemplate& tmpl,
                                 const std::vector<std::size_t>& L_grid, const HWindow& window,
                                 const SamplingPlan& plan, const RunOptions& opts) {
    RLELAB_REQUIRE(window.lo > 0.0 && window.hi > window.lo, ErrorCode::InvalidArgument,
                   "h window must satisfy 0 < lo < hi");
    RLELAB_REQUIRE(window.points >= 2, ErrorCode::InvalidArgument, "h window needs >= 2 points");
    auto rep = start_scaling("concentration", L_grid, plan);
    const std::uint64_t seed = plan.base_seed;

    std::vector<double> hs(window.points);
    for (std::size_t j = 0; j < window.points; ++j)
        hs[j] = window.lo + (window.hi - window.lo) * static_cast<double>(j) /
                                static_cast<double>(window.points - 1);
    hs.back() = window.hi;
    const auto w = trapezoid_weights(hs);
    const std::size_t H = hs.size();

    struct Row {
        std::vector<double> om, osq, e;
        std::uint64_t hash = 0;
    };
    std::vector<std::uint64_t> digests;
    for (std::size_t L : L_grid) {
        const ModelParams p = tmpl.at(L);
        const auto rows = detail::per_instance<Row>(p, prior, plan, opts, [&](const Instance& inst) {
            Row r;
            for (double h : hs) {
                const auto o = observe_instance(inst, detail::with_t_h(p, p.t, h), prior, opts.budget);
                r.om.push_back(o.overlap_mean);
                r.osq.push_back(o.overlap_sq);
                r.e.push_back(o.mmse);
                r.hash = o.instance_hash;
            }
            return r;
        });
        digests.push_back(detail::digest_of(rows, &Row::hash));

        const std::size_t n = rows.size();
        double value = 0.0;
        std::vector<double> infl(n, 0.0);
        for (std::size_t j = 0; j < H; ++j) {
            std::vector<double> om(n), osq(n), e(n);
            for (std::size_t k = 0; k < n; ++k) {
                om[k] = rows[k].om[j];
                osq[k] = rows[k].osq[j];
                e[k] = rows[k].e[j];
            }
            const double mom = detail::mean_of(om), mosq = detail::mean_of(osq),
                         me = detail::mean_of(e);
            value += w[j] * (mosq - 2.0 * me * mom + me * me);
            for (std::size_t k = 0; k < n; ++k)
                infl[k] += w[j] * (osq[k] - 2.0 * me * om[k] + (2.0 * me - 2.0 * mom) * e[k]);
        }
        ScalingPoint sp;
        sp.L = L;
        sp.params = p;
        sp.lhs = estimate_linearized(value, infl, seed);
        sp.rhs = EstimateWithError{0.0, 0.0, n, seed};
        sp.residual = residual_magnitude(value, infl, seed);
        rep.points.push_back(sp);
    }
    rep.instance_digest = combine_hashes(digests);
    finalize(rep);
    rep.notes.push_back("centering at the sample MMSE adds an O(1/n) bias");
    rep.notes.push_back("fitted slope " + fmt(rep.slope) + " is reported, not compared to a rate");
    return rep;
}

std::vector<MomentCheck> signal_moment_envelope(const ModelParams& params, const Prior& prior,
                                                const SamplingPlan& plan,
                                                const RunOptions& opts) {
    params.validate_against(prior);
    plan.validate();
    struct Row {
        double m[4];
    };
    const auto rows = parallel_map<Row>(plan.n_samples, opts.workers, [&](std::size_t k) {
        const auto inst = sample_instance(params, prior, plan.key(k));
        Row r{};
        const std::size_t R = inst.rows();
        for (std::size_t mu = 0; mu < R; ++mu) {
            const auto row = inst.row(mu);
            double ps = 0.0;
            for (std::size_t i = 0; i < inst.N(); ++i) ps += row[i] * inst.s[i];
            double pw = 1.0;
            for (int n = 0; n < 4; ++n) {
                pw *= ps * ps;
                r.m[n] += pw;
            }
        }
        for (double& v : r.m) v = R > 0 ? v / static_cast<double>(R) : 0.0;
        return r;
    });
    std::vector<MomentCheck> out;
    const double var = static_cast<double>(params.B) * prior.s_max() * prior.s_max();
    double dfact = 1.0;
    for (int n = 1; n <= 4; ++n) {
        dfact *= static_cast<double>(2 * n - 1);
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.m[n - 1]);
        MomentCheck c;
        c.order = n;
        c.moment = estimate(v, plan.base_seed);
        c.envelope = dfact * std::pow(var, n);
        c.within = c.moment.mean <= c.envelope + 4.0 * c.moment.std_error;
        out.push_back(c);
    }
    return out;
}

}  // namespace rlelab
