#pragma once

#include <cstddef>
#include <vector>

#include "rlelab/model.hpp"
#include "rlelab/prior.hpp"

namespace rlelab {

// Incremental evaluation of H_{t,h} over section configurations of the prior
// support. Moving one section updates the row residuals r_mu = [phi (x - s)]_mu
// in O(rows) using per-(section, atom) column projections.
class EnergyCache {
public:
    EnergyCache(const Instance& inst, const ModelParams& params, const Prior& prior);

    std::size_t sections() const noexcept { return L_; }
    std::size_t support_size() const noexcept { return K_; }
    const std::vector<std::size_t>& support() const noexcept { return support_; }
    const std::vector<std::size_t>& state() const noexcept { return state_; }
    const std::vector<double>& residuals() const noexcept { return r_; }

    // Section l now takes support atom k (index into support()).
    void move(std::size_t l, std::size_t k) {
        const std::size_t old = state_[l];
        state_[l] = k;
        const double* p_new = &proj_[(l * K_ + k) * R_];
        const double* p_old = &proj_[(l * K_ + old) * R_];
        for (std::size_t mu = 0; mu < R_; ++mu) r_[mu] += p_new[mu] - p_old[mu];
        sep_total_ += sep_[l * K_ + k] - sep_[l * K_ + old];
        ov_total_ += ov_[l * K_ + k] - ov_[l * K_ + old];
    }

    double energy() const {
        double e = constant_ + side_total();
        for (std::size_t mu = 0; mu < R_; ++mu) e += r_[mu] * (c2_[mu] * r_[mu] + c1_[mu]);
        return e;
    }
    // log P0(x) - H(x)
    double log_weight() const {
        double e = constant_ + sep_total_;
        for (std::size_t mu = 0; mu < R_; ++mu) e += r_[mu] * (c2_[mu] * r_[mu] + c1_[mu]);
        return -e;
    }
    double overlap() const noexcept { return ov_total_; }

    // Current configuration as an N-vector.
    std::vector<double> configuration() const;

    // Tables shared with enumerate_posterior.
    double projection(std::size_t l, std::size_t k, std::size_t mu) const {
        return proj_[(l * K_ + k) * R_ + mu];
    }
    double overlap_term(std::size_t l, std::size_t k) const { return ov_[l * K_ + k]; }
    double signal_projection(std::size_t l, std::size_t mu) const { return proj_s_[l * R_ + mu]; }

private:
    double side_total() const;

    const Instance* inst_;
    const Prior* prior_;
    std::size_t L_, B_, K_, R_;
    std::vector<std::size_t> support_;
    std::vector<double> proj_;   // (l*K + k)*R + mu
    std::vector<double> proj_s_;  // l*R + mu, section l of [phi s]_mu
    std::vector<double> c2_, c1_;
    std::vector<double> sep_;    // side energy - log p_k
    std::vector<double> logp_;   // log p_k per support index
    std::vector<double> ov_;     // overlap contribution
    double constant_ = 0.0;
    std::vector<std::size_t> state_;
    std::vector<double> r_;
    double sep_total_ = 0.0;
    double ov_total_ = 0.0;
};

}  // namespace rlelab
