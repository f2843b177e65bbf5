#include "rlelab/prior.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rlelab/error.hpp"

namespace rlelab {

Prior make_prior(const std::vector<std::vector<double>>& atoms,
                 const std::vector<double>& weights) {
    RLELAB_REQUIRE(!atoms.empty(), ErrorCode::InvalidArgument, "prior needs at least one atom");
    RLELAB_REQUIRE(atoms.size() == weights.size(), ErrorCode::DimensionMismatch,
                   "prior: " + std::to_string(atoms.size()) + " atoms but " +
                       std::to_string(weights.size()) + " weights");
    const std::size_t dim = atoms.front().size();
    RLELAB_REQUIRE(dim >= 1, ErrorCode::InvalidArgument, "prior atoms must have dimension >= 1");

    Prior p;
    p.dim_ = dim;
    p.atoms_.reserve(atoms.size() * dim);
    for (const auto& a : atoms) {
        RLELAB_REQUIRE(a.size() == dim, ErrorCode::DimensionMismatch,
                       "prior atoms have inconsistent dimension");
        for (double v : a) {
            RLELAB_REQUIRE(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite prior atom");
            p.atoms_.push_back(v);
            p.s_max_ = std::max(p.s_max_, std::abs(v));
        }
    }

    double sum = 0.0;
    for (double w : weights) {
        RLELAB_REQUIRE(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidArgument,
                       "prior weights must be finite and nonnegative");
        sum += w;
    }
    RLELAB_REQUIRE(std::abs(sum - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
                   "prior weights sum to " + std::to_string(sum) + ", expected 1");
    p.weights_ = weights;
    for (double& w : p.weights_) w /= sum;
    return p;
}

Prior binary_prior() { return make_prior({{1.0}, {-1.0}}, {0.5, 0.5}); }

std::vector<std::size_t> Prior::support() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < weights_.size(); ++k)
        if (weights_[k] > 0.0) out.push_back(k);
    return out;
}

std::vector<double> Prior::mean() const {
    std::vector<double> m(dim_, 0.0);
    for (std::size_t k = 0; k < num_atoms(); ++k)
        for (std::size_t j = 0; j < dim_; ++j) m[j] += weights_[k] * atoms_[k * dim_ + j];
    return m;
}

double Prior::section_variance() const {
    const auto m = mean();
    double v = 0.0;
    for (std::size_t k = 0; k < num_atoms(); ++k)
        for (std::size_t j = 0; j < dim_; ++j) {
            const double d = atoms_[k * dim_ + j] - m[j];
            v += weights_[k] * d * d;
        }
    return v;
}

}  // namespace rlelab
