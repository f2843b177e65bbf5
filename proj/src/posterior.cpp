#include "rlelab/posterior.hpp"

#include <cmath>

#include "rlelab/energy_cache.hpp"
#include "rlelab/error.hpp"

namespace rlelab {

namespace {

// Neumaier-compensated accumulators laid out as parallel arrays.
class CompensatedArray {
public:
    explicit CompensatedArray(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

    void add(std::size_t i, double x) {
        const double s = sum_[i];
        const double t = s + x;
        comp_[i] += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        sum_[i] = t;
    }
    void scale(double f) {
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            sum_[i] *= f;
            comp_[i] *= f;
        }
    }
    double value(std::size_t i) const { return sum_[i] + comp_[i]; }

private:
    std::vector<double> sum_;
    std::vector<double> comp_;
};

}  // namespace

PosteriorSummary enumerate_posterior(const Instance& inst, const ModelParams& params,
                                     const Prior& prior, std::uint64_t budget) {
    EnergyCache cache(inst, params, prior);

    const std::size_t K = cache.support_size();
    const std::size_t L = inst.L;
    const std::size_t B = inst.B;
    const std::size_t N = inst.N();
    const std::size_t R = inst.rows();
    const std::size_t M = inst.M;
    const std::size_t S = inst.sub;

    PosteriorSummary out;
    out.configurations = configuration_count(K, L, budget);

    GrayWalk walk(K, L);
    const auto& digits = cache.state();
    const auto& r = cache.residuals();

    CompensatedArray z_acc(1);
    CompensatedArray marg(L * K);
    CompensatedArray ov_acc(1);
    CompensatedArray rsq(R);
    CompensatedArray cross(S * L * K);
    CompensatedArray sub_ov(2 * S);
    double shift = 0.0;
    bool first = true;

    for (;;) {
        const double lw = cache.log_weight();
        if (!std::isfinite(lw))
            throw Error(ErrorCode::NonFiniteEnergy, "non-finite energy during enumeration");
        if (first || lw > shift) {
            if (!first) {
                const double f = std::exp(shift - lw);
                z_acc.scale(f);
                marg.scale(f);
                ov_acc.scale(f);
                rsq.scale(f);
                cross.scale(f);
                sub_ov.scale(f);
            }
            shift = lw;
            first = false;
        }
        const double w = std::exp(lw - shift);
        const double ov = cache.overlap();

        z_acc.add(0, w);
        for (std::size_t l = 0; l < L; ++l) marg.add(l * K + digits[l], w);
        ov_acc.add(0, w * ov * ov);
        for (std::size_t mu = 0; mu < R; ++mu) rsq.add(mu, w * r[mu] * r[mu]);
        for (std::size_t nu = 0; nu < S; ++nu) {
            const double rn = r[M + nu];
            const double wr = w * rn;
            for (std::size_t l = 0; l < L; ++l) cross.add((nu * L + l) * K + digits[l], wr);
            sub_ov.add(2 * nu, wr * ov);
            sub_ov.add(2 * nu + 1, wr * rn * ov);
        }

        const auto step = walk.next();
        if (!step) break;
        cache.move(step->section, step->atom);
    }

    const double z = z_acc.value(0);
    out.log_z = shift + std::log(z);
    const double inv_z = 1.0 / z;
    const auto& support = cache.support();

    out.marginals.assign(L * prior.num_atoms(), 0.0);
    out.mean.assign(N, 0.0);
    out.second_moment.assign(N, 0.0);
    out.row_mean.assign(R, 0.0);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t k = 0; k < K; ++k) {
            const double pk = marg.value(l * K + k) * inv_z;
            out.marginals[l * prior.num_atoms() + support[k]] = pk;
            const auto a = prior.atom(support[k]);
            for (std::size_t j = 0; j < B; ++j) {
                out.mean[l * B + j] += pk * a[j];
                out.second_moment[l * B + j] += pk * a[j] * a[j];
            }
            for (std::size_t mu = 0; mu < R; ++mu)
                out.row_mean[mu] += pk * (cache.projection(l, k, mu) - cache.signal_projection(l, mu));
            out.overlap_mean += pk * cache.overlap_term(l, k);
        }

    out.overlap_sq = ov_acc.value(0) * inv_z;
    out.row_sq.resize(R);
    for (std::size_t mu = 0; mu < R; ++mu) out.row_sq[mu] = rsq.value(mu) * inv_z;

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double d = inst.s[i] - out.mean[i];
        err += d * d;
    }
    out.section_mmse_term = err / static_cast<double>(L);

    out.sub_cross.assign(S * N, 0.0);
    out.sub_overlap_r.resize(S);
    out.sub_overlap_r2.resize(S);
    for (std::size_t nu = 0; nu < S; ++nu) {
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t k = 0; k < K; ++k) {
                const double c = cross.value((nu * L + l) * K + k) * inv_z;
                const auto a = prior.atom(support[k]);
                for (std::size_t j = 0; j < B; ++j)
                    out.sub_cross[nu * N + l * B + j] += c * (a[j] - inst.s[l * B + j]);
            }
        out.sub_overlap_r[nu] = sub_ov.value(2 * nu) * inv_z;
        out.sub_overlap_r2[nu] = sub_ov.value(2 * nu + 1) * inv_z;
    }
    return out;
}

}  // namespace rlelab
