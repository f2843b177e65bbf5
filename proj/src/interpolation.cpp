#include "rlelab/interpolation.hpp"

#include <cmath>

#include "orchestrate.hpp"
#include "rlelab/error.hpp"

namespace rlelab {

namespace {

struct DerivativeRow {
    double direct = 0.0;
    double ibp = 0.0;
    double plus = 0.0, minus = 0.0, plus_half = 0.0, minus_half = 0.0;
    std::uint64_t hash = 0;
};

struct PathRow {
    std::vector<double> i, e, ys, dt_ibp, dt_direct;
    std::uint64_t hash = 0;
};

EstimateWithError column_estimate(const std::vector<PathRow>& rows,
                                  std::vector<double> PathRow::*field, std::size_t j,
                                  std::uint64_t seed) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back((r.*field)[j]);
    return estimate(v, seed);
}

}  // namespace

TDerivative dt_derivative(const ModelParams& params, const Prior& prior, const SamplingPlan& plan,
                          double fd_step, const RunOptions& opts, double threshold) {
    RLELAB_REQUIRE(params.t > 0.0, ErrorCode::InvalidArgument,
                   "the direct t-derivative needs t > 0");
    RLELAB_REQUIRE(params.sub_size() >= 1, ErrorCode::InvalidArgument,
                   "the t-derivative needs |S| >= 1");
    const double t = params.t;
    const bool fd = fd_step > 0.0 && t - fd_step >= 0.0 && t + fd_step <= 1.0;

    const auto rows = detail::per_instance<DerivativeRow>(
        params, prior, plan, opts, [&](const Instance& inst) {
            DerivativeRow r;
            const auto o = observe_instance(inst, params, prior, opts.budget);
            r.direct = o.dt_direct;
            r.ibp = o.dt_ibp;
            r.hash = o.instance_hash;
            if (fd) {
                auto at = [&](double tt) {
                    return observe_instance(inst, detail::with_t_h(params, tt, params.h), prior,
                                            opts.budget)
                        .mutual_info;
                };
                r.plus = at(t + fd_step);
                r.minus = at(t - fd_step);
                r.plus_half = at(t + 0.5 * fd_step);
                r.minus_half = at(t - 0.5 * fd_step);
            }
            return r;
        });

    const std::uint64_t digest = detail::digest_of(rows, &DerivativeRow::hash);
    TDerivative out;
    out.direct = estimate(detail::field_of(rows, &DerivativeRow::direct), plan.base_seed);
    out.ibp = estimate(detail::field_of(rows, &DerivativeRow::ibp), plan.base_seed);

    auto add = [&](std::string name, const EstimateWithError& l, const EstimateWithError& r,
                   double bias) {
        auto rep = make_relation_report(std::move(name), l, r, bias, params, plan, threshold);
        rep.instance_digest = digest;
        out.reports.push_back(std::move(rep));
    };
    add("dt_direct_vs_ibp", *out.direct, out.ibp, 0.0);

    if (fd) {
        const auto cd = detail::central_difference(
            detail::field_of(rows, &DerivativeRow::plus),
            detail::field_of(rows, &DerivativeRow::minus),
            detail::field_of(rows, &DerivativeRow::plus_half),
            detail::field_of(rows, &DerivativeRow::minus_half), fd_step);
        out.finite_difference = estimate(cd.samples, plan.base_seed);
        out.fd_bias = cd.bias;
        add("dt_direct_vs_fd", *out.direct, *out.finite_difference, cd.bias);
        add("dt_ibp_vs_fd", out.ibp, *out.finite_difference, cd.bias);
    }
    return out;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
    RLELAB_REQUIRE(points >= 2, ErrorCode::InvalidArgument, "a grid needs >= 2 points");
    RLELAB_REQUIRE(hi > lo, ErrorCode::InvalidArgument, "grid bounds must satisfy lo < hi");
    std::vector<double> g(points);
    const double den = static_cast<double>(points - 1);
    for (std::size_t j = 0; j < points; ++j) g[j] = lo + (hi - lo) * static_cast<double>(j) / den;
    g.back() = hi;
    return g;
}

PathIntegral integrate_path(const ModelParams& params, const Prior& prior,
                            const SamplingPlan& plan, const std::vector<double>& t_grid,
                            const RunOptions& opts, double threshold) {
    RLELAB_REQUIRE(t_grid.size() >= 2, ErrorCode::InvalidArgument, "t_grid needs >= 2 points");
    RLELAB_REQUIRE(t_grid.front() == 0.0 && t_grid.back() == 1.0, ErrorCode::InvalidArgument,
                   "t_grid must start at 0 and end at 1");
    for (std::size_t j = 1; j < t_grid.size(); ++j)
        RLELAB_REQUIRE(t_grid[j] > t_grid[j - 1], ErrorCode::InvalidArgument,
                       "t_grid must be strictly increasing");
    RLELAB_REQUIRE(params.sub_size() >= 1, ErrorCode::InvalidArgument,
                   "path integration needs |S| >= 1");

    PathIntegral out;
    if (t_grid.size() < 5)
        out.warnings.push_back("t_grid has fewer than 5 points; quadrature bias may dominate");
    if (params.h == 0.0) out.warnings.push_back("h = 0 on the interpolation path");

    const std::size_t G = t_grid.size();
    const auto rows = detail::per_instance<PathRow>(
        params, prior, plan, opts, [&](const Instance& inst) {
            PathRow r;
            r.i.resize(G);
            r.e.resize(G);
            r.ys.resize(G);
            r.dt_ibp.resize(G);
            r.dt_direct.resize(G);
            for (std::size_t j = 0; j < G; ++j) {
                const auto o = observe_instance(
                    inst, detail::with_t_h(params, t_grid[j], params.h), prior, opts.budget);
                r.i[j] = o.mutual_info;
                r.e[j] = o.mmse;
                r.ys[j] = o.sub_meas_mmse;
                r.dt_ibp[j] = o.dt_ibp;
                r.dt_direct[j] = o.dt_direct;
                r.hash = o.instance_hash;
            }
            return r;
        });
    const std::uint64_t seed = plan.base_seed;
    const std::uint64_t digest = detail::digest_of(rows, &PathRow::hash);

    for (std::size_t j = 0; j < G; ++j) {
        PathPoint p;
        p.t = t_grid[j];
        p.i_est = column_estimate(rows, &PathRow::i, j, seed);
        p.e_est = column_estimate(rows, &PathRow::e, j, seed);
        p.y_sub_est = column_estimate(rows, &PathRow::ys, j, seed);
        p.dt_est = column_estimate(rows, &PathRow::dt_ibp, j, seed);
        if (t_grid[j] > 0.0) p.dt_direct_est = column_estimate(rows, &PathRow::dt_direct, j, seed);
        out.points.push_back(p);
    }

    // Coarse grid: every other point, always keeping t = 1.
    std::vector<std::size_t> coarse_idx;
    for (std::size_t j = 0; j < G; j += 2) coarse_idx.push_back(j);
    if (coarse_idx.back() != G - 1) coarse_idx.push_back(G - 1);
    std::vector<double> coarse_grid;
    for (std::size_t j : coarse_idx) coarse_grid.push_back(t_grid[j]);
    const auto w_fine = trapezoid_weights(t_grid);
    const auto w_coarse = trapezoid_weights(coarse_grid);

    const std::size_t n = rows.size();
    std::vector<double> fine(n), gap(n), direct(n), e0(n);
    for (std::size_t k = 0; k < n; ++k) {
        double f = 0.0, c = 0.0;
        for (std::size_t j = 0; j < G; ++j) f += w_fine[j] * rows[k].dt_ibp[j];
        for (std::size_t j = 0; j < coarse_idx.size(); ++j)
            c += w_coarse[j] * rows[k].dt_ibp[coarse_idx[j]];
        fine[k] = f;
        gap[k] = f - c;
        direct[k] = rows[k].i[G - 1] - rows[k].i[0];
        e0[k] = rows[k].e[0];
    }
    out.quadrature = estimate(fine, seed);
    out.direct = estimate(direct, seed);
    out.quadrature_bias = G >= 3 ? std::abs(detail::mean_of(gap)) / 3.0 : 0.0;

    const double L = static_cast<double>(params.L);
    const double S = static_cast<double>(params.sub_size());
    const double delta = params.delta;
    const double e0_mean = detail::mean_of(e0);
    const double scale = S / (2.0 * L);
    std::vector<double> infl(n);
    for (std::size_t k = 0; k < n; ++k) infl[k] = scale * e0[k] / (delta + e0_mean);
    out.closed_form = estimate_linearized(scale * std::log1p(e0_mean / delta), infl, seed);

    out.rate_ratio_lhs = out.direct.mean * static_cast<double>(params.N()) / S;
    out.rate_ratio_rhs = 0.5 * static_cast<double>(params.B) * std::log1p(e0_mean / delta);

    out.quadrature_vs_direct = make_relation_report("path_quadrature_vs_direct", out.quadrature,
                                                    out.direct, out.quadrature_bias, params, plan,
                                                    threshold);
    out.quadrature_vs_direct.instance_digest = digest;
    out.quadrature_vs_direct.notes = out.warnings;

    out.closed_form_vs_quadrature = make_relation_report(
        "path_closed_form_vs_quadrature", out.closed_form, out.quadrature, 0.0, params, plan,
        threshold);
    out.closed_form_vs_quadrature.instance_digest = digest;
    out.closed_form_vs_quadrature.notes.push_back(
        "asymptotic statement: agreement is expected only up to a residual vanishing in L");
    return out;
}

}  // namespace rlelab
