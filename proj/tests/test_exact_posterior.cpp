#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rlelab/energy_cache.hpp"
#include "rlelab/error.hpp"
#include "rlelab/gray.hpp"
#include "rlelab/posterior.hpp"
#include "test_util.hpp"

using namespace rlelab;
using testutil::all_close;
using testutil::close;

namespace {

std::vector<std::vector<std::size_t>> walk_digits(std::size_t K, std::size_t L) {
    GrayWalk w(K, L);
    std::vector<std::vector<std::size_t>> seen{w.digits()};
    while (w.next()) seen.push_back(w.digits());
    return seen;
}

}  // namespace

TEST_CASE("gray_schedule: K=2, L=2 visits the reflected order") {
    const auto seen = walk_digits(2, 2);
    const std::vector<std::vector<std::size_t>> expect{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(seen == expect);
    const auto s = gray_schedule(2, 2);
    CHECK(s.size() == 3);
}

TEST_CASE("gray_schedule: K=1 has a single configuration and no transitions") {
    CHECK(gray_schedule(1, 7).empty());
    CHECK(walk_digits(1, 7).size() == 1);
}

TEST_CASE("gray_schedule: K=3, L=2 frozen sequence") {
    const auto seen = walk_digits(3, 2);
    const std::vector<std::vector<std::size_t>> expect{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1},
                                                       {0, 1}, {0, 2}, {1, 2}, {2, 2}};
    CHECK(seen == expect);
    const std::vector<GrayStep> steps{{0, 1}, {0, 2}, {1, 1}, {0, 1},
                                      {0, 0}, {1, 2}, {0, 1}, {0, 2}};
    CHECK(gray_schedule(3, 2) == steps);
}

TEST_CASE("gray_schedule: every configuration once, one section per step") {
    for (std::size_t K : {2, 3, 4})
        for (std::size_t L : {1, 3, 5}) {
            const auto seen = walk_digits(K, L);
            CHECK(seen.size() == static_cast<std::size_t>(std::pow(K, L)));
            std::set<std::vector<std::size_t>> uniq(seen.begin(), seen.end());
            CHECK(uniq.size() == seen.size());
            for (std::size_t i = 1; i < seen.size(); ++i) {
                std::size_t changed = 0;
                for (std::size_t l = 0; l < L; ++l) changed += seen[i][l] != seen[i - 1][l];
                CHECK(changed == 1);
            }
        }
}

TEST_CASE("gray_schedule: budget") {
    CHECK(configuration_count(2, 26) == (std::uint64_t{1} << 26));
    CHECK_THROWS_AS(configuration_count(2, 27), Error);
    try {
        gray_schedule(3, 20, 1000);
        FAIL("expected a budget error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BudgetExceeded);
    }
}

TEST_CASE("enumerate_posterior: one-atom prior") {
    ModelParams p;
    p.L = 5;
    p.M = 4;
    p.sub_set_size = 2;
    const auto prior = make_prior({{0.8}}, {1.0});
    const auto inst = sample_instance(p, prior, {1, 1, 1});
    const auto post = enumerate_posterior(inst, p, prior);
    double zz = 0.0;
    for (double z : inst.z) zz += z * z / 2.0;
    CHECK(post.log_z == doctest::Approx(-zz).epsilon(1e-14));
    CHECK(post.mean == inst.s);
    for (double r : post.row_mean) CHECK(r == 0.0);
    CHECK(post.overlap_mean == 0.0);
    CHECK(post.section_mmse_term == 0.0);
}

TEST_CASE("enumerate_posterior: no measurements gives the prior") {
    ModelParams p;
    p.L = 3;
    p.B = 2;
    p.M = 0;
    p.sub_set_size = 0;
    const auto prior = make_prior({{1.0, 0.0}, {0.0, 2.0}, {-1.0, -1.0}}, {0.2, 0.5, 0.3});
    const auto inst = sample_instance(p, prior, {2, 2, 2});
    const auto post = enumerate_posterior(inst, p, prior);
    CHECK(std::abs(post.log_z) < 1e-14);
    const auto m = prior.mean();
    for (std::size_t l = 0; l < p.L; ++l)
        for (std::size_t b = 0; b < p.B; ++b)
            CHECK(post.mean[l * p.B + b] == doctest::Approx(m[b]).epsilon(1e-13));
}

TEST_CASE("enumerate_posterior: L=2 binary case against the naive sum") {
    ModelParams p;
    p.L = 2;
    p.M = 1;
    p.sub_set_size = 0;
    const auto prior = binary_prior();
    const auto inst = sample_instance(p, prior, {2024, 0, 0});
    const auto post = enumerate_posterior(inst, p, prior);
    const auto ref = oracle::enumerate(inst, p, prior);
    CHECK(close(post.log_z, ref.log_z, 1e-12));
    CHECK(all_close(post.mean, ref.mean, 1e-12, 1e-15));
    CHECK(all_close(post.row_mean, ref.row_mean, 1e-12, 1e-15));
    CHECK(all_close(post.row_sq, ref.row_sq, 1e-12, 1e-15));
    CHECK(close(post.overlap_mean, ref.overlap_mean, 1e-12, 1e-15));
    CHECK(close(post.section_mmse_term, ref.section_mmse_term, 1e-12, 1e-15));
    CHECK(post.configurations == 4);
}

TEST_CASE("enumerate_posterior: oracle equivalence on 100 random instances") {
    std::mt19937_64 gen(77);
    std::uniform_int_distribution<std::size_t> Ld(1, 6), Kd(1, 3), Bd(1, 2), Md(0, 6), Sd(0, 2);
    std::uniform_real_distribution<double> U(-1.5, 1.5), W(0.05, 1.0);
    const double rel = 1e-10;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t K = Kd(gen), B = Bd(gen);
        std::vector<std::vector<double>> atoms(K, std::vector<double>(B));
        std::vector<double> w(K);
        for (auto& a : atoms)
            for (double& v : a) v = U(gen);
        for (double& v : w) v = W(gen);
        const double ws = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& v : w) v /= ws;
        const auto prior = make_prior(atoms, w);

        ModelParams p;
        p.L = Ld(gen);
        p.B = B;
        p.M = Md(gen);
        p.sub_set_size = Sd(gen);
        p.delta = std::exp(U(gen));
        p.t = (trial % 3 == 0) ? 0.0 : std::abs(U(gen)) / 1.5;
        p.h = (trial % 4 == 0) ? 0.0 : std::abs(U(gen));
        const auto inst = sample_instance(p, prior, {static_cast<std::uint64_t>(trial), 5, 0});
        const auto post = enumerate_posterior(inst, p, prior);
        const auto ref = oracle::enumerate(inst, p, prior);

        INFO("trial " << trial << " L=" << p.L << " K=" << K << " B=" << B);
        // Absolute floor relative to the natural scale of each quantity.
        const double scale = prior.s_max() * prior.s_max() + 1.0;
        CHECK(close(post.log_z, ref.log_z, rel, 1e-12));
        CHECK(all_close(post.mean, ref.mean, rel, rel * scale));
        CHECK(all_close(post.second_moment, ref.second_moment, rel, rel * scale));
        CHECK(all_close(post.marginals, ref.marginals, rel, rel));
        CHECK(all_close(post.row_mean, ref.row_mean, rel, rel * scale));
        CHECK(all_close(post.row_sq, ref.row_sq, rel, rel * scale));
        CHECK(close(post.overlap_mean, ref.overlap_mean, rel, rel * scale));
        CHECK(close(post.overlap_sq, ref.overlap_sq, rel, rel * scale * scale));
        CHECK(close(post.section_mmse_term, ref.section_mmse_term, rel, rel * scale));
        CHECK(all_close(post.sub_cross, ref.sub_cross, rel, rel * scale));
        CHECK(all_close(post.sub_overlap_r, ref.sub_overlap_r, rel, rel * scale * scale));
        CHECK(all_close(post.sub_overlap_r2, ref.sub_overlap_r2, rel, rel * scale * scale));
    }
}

TEST_CASE("enumerate_posterior: zero-weight atoms are skipped") {
    const auto prior = make_prior({{1.0}, {5.0}, {-1.0}}, {0.5, 0.0, 0.5});
    ModelParams p;
    p.L = 4;
    p.M = 3;
    p.h = 0.1;
    const auto inst = sample_instance(p, prior, {3, 0, 1});
    const auto post = enumerate_posterior(inst, p, prior);
    const auto ref = oracle::enumerate(inst, p, prior);
    CHECK(post.configurations == 16);
    CHECK(close(post.log_z, ref.log_z, 1e-12));
    CHECK(all_close(post.mean, ref.mean, 1e-12, 1e-14));
    for (std::size_t l = 0; l < p.L; ++l) CHECK(post.marginals[l * 3 + 1] == 0.0);
}

TEST_CASE("enumerate_posterior: permutation equivariance") {
    ModelParams p;
    p.L = 6;
    p.B = 2;
    p.M = 5;
    p.sub_set_size = 1;
    p.t = 0.4;
    p.h = 0.2;
    const auto prior = make_prior({{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}}, {0.3, 0.3, 0.4});
    const auto inst = sample_instance(p, prior, {4, 4, 4});
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};  // new section l holds old perm[l]

    Instance q = inst;
    const std::size_t N = inst.N(), B = p.B;
    for (std::size_t l = 0; l < p.L; ++l)
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t dst = l * B + b, src = perm[l] * B + b;
            q.s[dst] = inst.s[src];
            q.zhat[dst] = inst.zhat[src];
            for (std::size_t mu = 0; mu < inst.rows(); ++mu)
                q.phi[mu * N + dst] = inst.phi[mu * N + src];
        }
    const auto a = enumerate_posterior(inst, p, prior);
    const auto b = enumerate_posterior(q, p, prior);
    CHECK(close(a.log_z, b.log_z, 1e-10));
    for (std::size_t l = 0; l < p.L; ++l)
        for (std::size_t c = 0; c < B; ++c)
            CHECK(close(b.mean[l * B + c], a.mean[perm[l] * B + c], 1e-10, 1e-12));
}

TEST_CASE("enumerate_posterior: stable at small delta") {
    ModelParams p;
    p.L = 16;
    p.M = 16;
    p.delta = 1e-3;
    const auto prior = binary_prior();
    const auto inst = sample_instance(p, prior, {8, 8, 8});
    const auto post = enumerate_posterior(inst, p, prior);
    CHECK(std::isfinite(post.log_z));
    for (double m : post.mean) CHECK(std::isfinite(m));
    CHECK(post.row_sq[0] >= post.row_mean[0] * post.row_mean[0]);
}

TEST_CASE("enumerate_posterior: summary invariants") {
    ModelParams p;
    p.L = 7;
    p.M = 5;
    p.sub_set_size = 2;
    p.t = 0.6;
    p.h = 0.05;
    const auto prior = make_prior({{1.0}, {-1.0}, {0.0}}, {0.25, 0.25, 0.5});
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto post = enumerate_posterior(sample_instance(p, prior, {1, 9, k}), p, prior);
        for (std::size_t mu = 0; mu < p.rows(); ++mu)
            CHECK(post.row_sq[mu] >= post.row_mean[mu] * post.row_mean[mu] - 1e-14);
        CHECK(post.overlap_sq >= post.overlap_mean * post.overlap_mean - 1e-14);
        CHECK(std::isfinite(post.log_z));
    }
}

TEST_CASE("EnergyCache: incremental energies match full recomputation") {
    ModelParams p;
    p.L = 6;
    p.B = 2;
    p.M = 7;
    p.sub_set_size = 2;
    p.t = 0.7;
    p.h = 0.3;
    p.delta = 0.4;
    const auto prior = make_prior({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.5}}, {0.3, 0.3, 0.4});
    const auto inst = sample_instance(p, prior, {6, 6, 6});
    EnergyCache cache(inst, p, prior);
    GrayWalk walk(cache.support_size(), p.L);
    std::size_t checked = 0;
    for (;;) {
        const auto x = cache.configuration();
        CHECK(close(cache.energy(), interp_energy(x, inst, p), 1e-12));
        ++checked;
        const auto step = walk.next();
        if (!step) break;
        cache.move(step->section, step->atom);
    }
    CHECK(checked == 729);
}

TEST_CASE("enumerate_posterior: L=16, M=8 timing") {
    ModelParams p;
    p.L = 16;
    p.M = 8;
    const auto prior = binary_prior();
    const auto inst = sample_instance(p, prior, {1, 2, 3});
    enumerate_posterior(inst, p, prior);  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    const auto post = enumerate_posterior(inst, p, prior);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    MESSAGE("L=16 M=8 enumeration: " << ms << " ms");
    CHECK(post.configurations == 65536);
    CHECK(ms <= 50.0);
}
