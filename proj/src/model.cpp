#include "rlelab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

#include "rlelab/error.hpp"

namespace rlelab {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { Row = 1, Signal = 2, Side = 3 };

std::mt19937_64 stream(const InstanceKey& key, Stream kind, std::uint64_t row = 0) {
    std::uint64_t h = splitmix64(key.base_seed);
    h = splitmix64(h ^ key.tag);
    h = splitmix64(h ^ key.index);
    h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
    h = splitmix64(h ^ row);
    return std::mt19937_64(h);
}

}  // namespace

std::size_t ModelParams::sub_size() const {
    if (sub_set_size) return *sub_set_size;
    const double mu = std::floor(std::pow(static_cast<double>(M), u) + 1e-12);
    return std::max<std::size_t>(1, static_cast<std::size_t>(mu));
}

void ModelParams::validate() const {
    RLELAB_REQUIRE(L >= 1, ErrorCode::InvalidArgument, "L must be >= 1");
    RLELAB_REQUIRE(B >= 1, ErrorCode::InvalidArgument, "B must be >= 1");
    RLELAB_REQUIRE(std::isfinite(delta) && delta > 0.0, ErrorCode::InvalidArgument,
                   "delta must be finite and > 0");
    RLELAB_REQUIRE(t >= 0.0 && t <= 1.0, ErrorCode::InvalidArgument, "t must lie in [0, 1]");
    RLELAB_REQUIRE(std::isfinite(h) && h >= 0.0, ErrorCode::InvalidArgument, "h must be >= 0");
    RLELAB_REQUIRE(u > 0.0 && u < 1.0, ErrorCode::InvalidArgument, "u must lie in (0, 1)");
}

void ModelParams::validate_against(const Prior& prior) const {
    validate();
    RLELAB_REQUIRE(prior.section_dim() == B, ErrorCode::DimensionMismatch,
                   "prior section dimension " + std::to_string(prior.section_dim()) +
                       " != B = " + std::to_string(B));
}

std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t Instance::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto* vec : {&phi, &s, &z, &zhat})
        for (double v : *vec) mix(std::bit_cast<std::uint64_t>(v));
    return h;
}

Instance sample_instance(const ModelParams& params, const Prior& prior, const InstanceKey& key) {
    params.validate_against(prior);

    Instance inst;
    inst.L = params.L;
    inst.B = params.B;
    inst.M = params.M;
    inst.sub = params.sub_size();
    inst.s_max = prior.s_max();
    inst.key = key;
    const std::size_t n = inst.N();
    const std::size_t rows = inst.rows();
    const double sd = 1.0 / std::sqrt(static_cast<double>(params.L));

    inst.phi.resize(rows * n);
    inst.z.resize(rows);
    for (std::size_t mu = 0; mu < rows; ++mu) {
        auto gen = stream(key, Stream::Row, mu);
        std::normal_distribution<double> g(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) inst.phi[mu * n + i] = sd * g(gen);
        inst.z[mu] = g(gen);
    }

    {
        auto gen = stream(key, Stream::Signal);
        std::discrete_distribution<std::size_t> pick(prior.weights().begin(), prior.weights().end());
        inst.s.resize(n);
        inst.section_atoms.resize(params.L);
        for (std::size_t l = 0; l < params.L; ++l) {
            const std::size_t k = pick(gen);
            inst.section_atoms[l] = k;
            const auto a = prior.atom(k);
            std::copy(a.begin(), a.end(), inst.s.begin() + static_cast<std::ptrdiff_t>(l * params.B));
        }
    }

    {
        auto gen = stream(key, Stream::Side);
        std::normal_distribution<double> g(0.0, 1.0);
        inst.zhat.resize(n);
        for (double& v : inst.zhat) v = g(gen);
    }
    return inst;
}

namespace {

double projected_residual(std::span<const double> row, std::span<const double> x,
                          std::span<const double> s) {
    double r = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) r += row[i] * (x[i] - s[i]);
    return r;
}

void check_dims(std::span<const double> x, const Instance& inst) {
    RLELAB_REQUIRE(x.size() == inst.N(), ErrorCode::DimensionMismatch,
                   "configuration has " + std::to_string(x.size()) + " entries, expected " +
                       std::to_string(inst.N()));
}

}  // namespace

double base_energy(std::span<const double> x, const Instance& inst, double delta) {
    check_dims(x, inst);
    const double sq = std::sqrt(delta);
    double e = 0.0;
    for (std::size_t mu = 0; mu < inst.M; ++mu) {
        const double d = projected_residual(inst.row(mu), x, inst.s) - inst.z[mu] * sq;
        e += d * d;
    }
    return e / (2.0 * delta);
}

double interp_energy(std::span<const double> x, const Instance& inst, const ModelParams& params) {
    check_dims(x, inst);
    const double delta = params.delta;
    const double t = params.t;
    const double h = params.h;
    double e = 0.0;

    if (h > 0.0) {
        const double sh = std::sqrt(h);
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < inst.N(); ++i) {
            const double xb = x[i] - inst.s[i];
            const double zh = inst.zhat[i];
            e += 0.5 * h * xb * xb - sh * xb * zh + 0.5 * zh * zh;
            abs_sum += std::abs(zh);
        }
        e += sh * inst.s_max * abs_sum;
    }

    const double inv_sd = 1.0 / std::sqrt(delta);
    for (std::size_t mu = 0; mu < inst.M; ++mu) {
        const double r = projected_residual(inst.row(mu), x, inst.s);
        const double z = inst.z[mu];
        e += r * r / (2.0 * delta) - r * z * inv_sd + 0.5 * z * z;
    }

    const double st = std::sqrt(t / delta);
    for (std::size_t nu = inst.M; nu < inst.rows(); ++nu) {
        const double r = projected_residual(inst.row(nu), x, inst.s);
        const double z = inst.z[nu];
        e += t * r * r / (2.0 * delta) - st * r * z + 0.5 * z * z;
    }
    return e;
}

}  // namespace rlelab
