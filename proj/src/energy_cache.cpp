#include "rlelab/energy_cache.hpp"

#include <cmath>

#include "rlelab/error.hpp"

namespace rlelab {

EnergyCache::EnergyCache(const Instance& inst, const ModelParams& params, const Prior& prior)
    : inst_(&inst), prior_(&prior), L_(inst.L), B_(inst.B), R_(inst.rows()),
      support_(prior.support()) {
    params.validate_against(prior);
    RLELAB_REQUIRE(inst.L == params.L && inst.B == params.B && inst.M == params.M &&
                       inst.sub == params.sub_size(),
                   ErrorCode::DimensionMismatch, "instance dimensions do not match parameters");
    K_ = support_.size();
    const std::size_t N = inst.N();

    proj_.assign(L_ * K_ * R_, 0.0);
    for (std::size_t l = 0; l < L_; ++l)
        for (std::size_t k = 0; k < K_; ++k) {
            const auto a = prior.atom(support_[k]);
            for (std::size_t mu = 0; mu < R_; ++mu) {
                const auto row = inst.row(mu);
                double acc = 0.0;
                for (std::size_t j = 0; j < B_; ++j) acc += row[l * B_ + j] * a[j];
                proj_[(l * K_ + k) * R_ + mu] = acc;
            }
        }
    // Same accumulation order as proj_, so sections equal to s contribute
    // exactly zero residual.
    proj_s_.assign(L_ * R_, 0.0);
    for (std::size_t l = 0; l < L_; ++l)
        for (std::size_t mu = 0; mu < R_; ++mu) {
            const auto row = inst.row(mu);
            double acc = 0.0;
            for (std::size_t j = 0; j < B_; ++j) acc += row[l * B_ + j] * inst.s[l * B_ + j];
            proj_s_[l * R_ + mu] = acc;
        }

    const double dl = params.delta;
    const double t = params.t;
    c2_.resize(R_);
    c1_.resize(R_);
    for (std::size_t mu = 0; mu < R_; ++mu) {
        const double z = inst.z[mu];
        if (mu < inst.M) {
            c2_[mu] = 1.0 / (2.0 * dl);
            c1_[mu] = -z / std::sqrt(dl);
        } else {
            c2_[mu] = t / (2.0 * dl);
            c1_[mu] = -std::sqrt(t / dl) * z;
        }
        constant_ += 0.5 * z * z;
    }

    const double h = params.h;
    const double sh = std::sqrt(h);
    if (h > 0.0) {
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            constant_ += 0.5 * inst.zhat[i] * inst.zhat[i];
            abs_sum += std::abs(inst.zhat[i]);
        }
        constant_ += sh * inst.s_max * abs_sum;
    }

    sep_.assign(L_ * K_, 0.0);
    ov_.assign(L_ * K_, 0.0);
    logp_.resize(K_);
    const double invL = 1.0 / static_cast<double>(L_);
    for (std::size_t k = 0; k < K_; ++k) logp_[k] = std::log(prior.weight(support_[k]));
    for (std::size_t l = 0; l < L_; ++l)
        for (std::size_t k = 0; k < K_; ++k) {
            const auto a = prior.atom(support_[k]);
            double side = 0.0, o = 0.0;
            for (std::size_t j = 0; j < B_; ++j) {
                const double xb = a[j] - inst.s[l * B_ + j];
                side += 0.5 * h * xb * xb - sh * xb * inst.zhat[l * B_ + j];
                o += xb * a[j];
            }
            sep_[l * K_ + k] = side - logp_[k];
            ov_[l * K_ + k] = o * invL;
        }

    state_.assign(L_, 0);
    r_.assign(R_, 0.0);
    for (std::size_t l = 0; l < L_; ++l) {
        for (std::size_t mu = 0; mu < R_; ++mu)
            r_[mu] += proj_[(l * K_) * R_ + mu] - proj_s_[l * R_ + mu];
        sep_total_ += sep_[l * K_];
        ov_total_ += ov_[l * K_];
    }
}

double EnergyCache::side_total() const {
    double logp = 0.0;
    for (std::size_t l = 0; l < L_; ++l) logp += logp_[state_[l]];
    return sep_total_ + logp;
}

std::vector<double> EnergyCache::configuration() const {
    std::vector<double> x(L_ * B_);
    for (std::size_t l = 0; l < L_; ++l) {
        const auto a = prior_->atom(support_[state_[l]]);
        for (std::size_t j = 0; j < B_; ++j) x[l * B_ + j] = a[j];
    }
    return x;
}

}  // namespace rlelab
