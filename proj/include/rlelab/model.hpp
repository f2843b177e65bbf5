#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rlelab/prior.hpp"

namespace rlelab {

// Scalar parameters of the interpolated, perturbed model.
//
// Rows 0..M-1 of an instance are the base measurements; rows M..M+|S|-1 are
// the sub-extensive set S, weighted by t. h is the side-channel snr.
struct ModelParams {
    std::size_t L = 1;
    std::size_t B = 1;
    std::size_t M = 0;
    double delta = 1.0;
    double t = 0.0;
    double h = 0.0;
    double u = 0.5;
    std::optional<std::size_t> sub_set_size;

    std::size_t N() const noexcept { return L * B; }
    double alpha() const noexcept { return static_cast<double>(M) / static_cast<double>(N()); }
    // |S| = max(1, floor(M^u)) unless overridden.
    std::size_t sub_size() const;
    std::size_t rows() const { return M + sub_size(); }

    // Throws Error(InvalidArgument) on violated invariants.
    void validate() const;
    void validate_against(const Prior& prior) const;
};

// Key of one quenched draw. Every quenched variable is drawn from a stream
// derived from (base_seed, tag, index, variable, row), so draws depend only on
// the key and never on the order in which instances are generated.
struct InstanceKey {
    std::uint64_t base_seed = 0;
    std::uint64_t tag = 0;
    std::uint64_t index = 0;

    friend bool operator==(const InstanceKey&, const InstanceKey&) = default;
};

std::uint64_t hash_tag(std::string_view tag);

struct Instance {
    std::size_t L = 0;
    std::size_t B = 0;
    std::size_t M = 0;
    std::size_t sub = 0;
    std::vector<double> phi;   // (M + sub) x N, row-major
    std::vector<double> s;     // N
    std::vector<double> z;     // M + sub
    std::vector<double> zhat;  // N
    std::vector<std::size_t> section_atoms;  // L, index of the atom of each section of s
    double s_max = 0.0;                      // of the prior that drew s
    InstanceKey key;

    std::size_t N() const noexcept { return L * B; }
    std::size_t rows() const noexcept { return M + sub; }
    std::span<const double> row(std::size_t mu) const { return {phi.data() + mu * N(), N()}; }

    // FNV-1a digest of every quenched value, used for CRN audit logs.
    std::uint64_t digest() const;
};

Instance sample_instance(const ModelParams& params, const Prior& prior, const InstanceKey& key);

// (1/2 delta) sum_{mu < M} ([phi (x - s)]_mu - z_mu sqrt(delta))^2
double base_energy(std::span<const double> x, const Instance& inst, double delta);

// Full interpolated perturbed energy H_{t,h}(x) in expanded form; regular at
// t = 0 and h = 0. The side-channel constants sum zhat^2/2 and
// sqrt(h) s_max sum |zhat| are present only when h > 0.
double interp_energy(std::span<const double> x, const Instance& inst, const ModelParams& params);

}  // namespace rlelab
