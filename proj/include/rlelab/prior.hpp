#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rlelab {

// Discrete section prior: K atoms in R^B with probabilities p_k.
class Prior {
public:
    Prior() = default;

    std::size_t num_atoms() const noexcept { return weights_.size(); }
    std::size_t section_dim() const noexcept { return dim_; }
    double s_max() const noexcept { return s_max_; }

    std::span<const double> atom(std::size_t k) const {
        return {atoms_.data() + k * dim_, dim_};
    }
    double weight(std::size_t k) const { return weights_[k]; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    // Atoms with nonzero probability, in declaration order.
    std::vector<std::size_t> support() const;

    // Prior mean and per-section variance tr Cov(a).
    std::vector<double> mean() const;
    double section_variance() const;

private:
    friend Prior make_prior(const std::vector<std::vector<double>>& atoms,
                            const std::vector<double>& weights);

    std::vector<double> atoms_;  // row-major K x B
    std::vector<double> weights_;
    std::size_t dim_ = 0;
    double s_max_ = 0.0;
};

// Validates and normalizes. Weights summing to 1 within 1e-9 are rescaled;
// anything further off is rejected.
Prior make_prior(const std::vector<std::vector<double>>& atoms,
                 const std::vector<double>& weights);

// The default +/-1 equiprobable scalar prior.
Prior binary_prior();

}  // namespace rlelab
