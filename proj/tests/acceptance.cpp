// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. Criteria 2-10 run once serially and once on eight
// workers; the serialized reports of the two runs must be byte-identical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rlelab/experiment.hpp"
#include "rlelab/interpolation.hpp"
#include "rlelab/posterior.hpp"
#include "rlelab/relations.hpp"

using namespace rlelab;

namespace {

constexpr double kZ = 4.0;
constexpr std::uint64_t kSeed = 2024;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SamplingPlan plan_of(std::size_t n) {
    SamplingPlan p;
    p.n_samples = n;
    p.base_seed = kSeed;
    p.crn_tag = "acceptance";
    return p;
}

// Shared setting: L = 8, M = 8, delta = 1, |S| = 1.
ModelParams setting(double t, double h) {
    ModelParams p;
    p.L = 8;
    p.M = 8;
    p.delta = 1.0;
    p.t = t;
    p.h = h;
    p.sub_set_size = 1;
    return p;
}

GridTemplate grid_template(double h) {
    GridTemplate g;
    g.params.L = 16;
    g.params.delta = 1.0;
    g.params.h = h;
    g.params.sub_set_size = 1;
    g.alpha = 1.0;
    return g;
}

const std::vector<std::size_t> kGrid{4, 8, 12, 16};

std::string est(const EstimateWithError& e) {
    return format_double(e.mean) + "," + format_double(e.std_error) + "," +
           std::to_string(e.n_samples);
}

std::string serialize(const RelationReport& r) {
    std::string s = "relation," + r.name + "," + est(r.lhs) + "," + est(r.rhs) + "," +
                    format_double(r.residual) + "," + format_double(r.bias_bound) + "," +
                    format_double(r.combined_error) + "," + format_double(r.z_score) + "," +
                    (r.pass ? "true" : "false") + "," + std::to_string(r.instance_digest) + "\n";
    for (const auto& n : r.notes) s += "note," + n + "\n";
    return s;
}

std::string serialize(const ScalingReport& r) {
    std::string s = "scaling," + r.name + "," + format_double(r.slope) + "," +
                    format_double(r.slope_lo) + "," + format_double(r.slope_hi) + "," +
                    (r.monotone ? "true" : "false") + "," + (r.pass ? "true" : "false") + "," +
                    format_double(r.final_over_initial) + "," + std::to_string(r.instance_digest) +
                    "\n";
    for (const auto& p : r.points)
        s += "point," + std::to_string(p.L) + "," + std::to_string(p.params.M) + "," +
             est(p.lhs) + "," + est(p.rhs) + "," + est(p.residual) + "\n";
    for (const auto& n : r.notes) s += "note," + n + "\n";
    return s;
}

struct Outcome {
    bool pass = false;
    std::string detail;
    std::string serialized;
};

std::string zs(const RelationReport& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s z=%+.2f", r.name.c_str(), r.z_score);
    return buf;
}

std::string residuals(const ScalingReport& r) {
    std::string s;
    char buf[48];
    for (const auto& p : r.points) {
        std::snprintf(buf, sizeof buf, "%s%.4f", s.empty() ? "" : " ", p.residual.mean);
        s += buf;
    }
    std::snprintf(buf, sizeof buf, " (final/initial %.2f)", r.final_over_initial);
    return s + buf;
}

Outcome criterion_oracle() {
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<std::size_t> Ld(1, 6), Kd(1, 3), Bd(1, 2), Md(0, 6), Sd(0, 2);
    std::uniform_real_distribution<double> U(-1.5, 1.5), W(0.05, 1.0);
    double worst = 0.0;
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
        p.t = std::abs(U(gen)) / 1.5;
        p.h = std::abs(U(gen));
        const auto inst = sample_instance(p, prior, {static_cast<std::uint64_t>(trial), 1, 0});
        const auto a = enumerate_posterior(inst, p, prior);
        const auto b = oracle::enumerate(inst, p, prior);
        // Relative to the natural scale of each quantity.
        auto rel = [&](double x, double y, double scale) {
            worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), scale}));
        };
        rel(a.log_z, b.log_z, 1.0);
        for (std::size_t i = 0; i < a.mean.size(); ++i) rel(a.mean[i], b.mean[i], prior.s_max());
        for (std::size_t i = 0; i < a.marginals.size(); ++i) rel(a.marginals[i], b.marginals[i], 1.0);
        for (std::size_t i = 0; i < a.row_sq.size(); ++i) rel(a.row_sq[i], b.row_sq[i], 1.0);
        rel(a.overlap_mean, b.overlap_mean, 1.0);
        rel(a.section_mmse_term, b.section_mmse_term, 1.0);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative deviation %.2e", worst);
    return {worst <= 1e-10, buf, {}};
}

Outcome criterion_nishimori(const RunOptions& opts) {
    const auto reps = nishimori_suite(setting(0.5, 0.01), binary_prior(), plan_of(2000), opts, kZ);
    Outcome o{reps.size() == 4, {}, {}};
    for (const auto& r : reps) {
        o.pass = o.pass && r.pass;
        o.detail += (o.detail.empty() ? "" : "; ") + zs(r);
        o.serialized += serialize(r);
    }
    return o;
}

Outcome criterion_canonical(const RunOptions& opts) {
    const auto r = check_canonical_immse(setting(0.0, 0.0), binary_prior(), plan_of(2000), 0.02,
                                         opts, kZ);
    char buf[64];
    std::snprintf(buf, sizeof buf, ", fd bias %.1e", r.bias_bound);
    return {r.pass, zs(r) + buf, serialize(r)};
}

Outcome criterion_dt(const RunOptions& opts) {
    Outcome o{true, {}, {}};
    for (double t : {0.25, 0.5, 0.75}) {
        const auto d = dt_derivative(setting(t, 0.01), binary_prior(), plan_of(2000), 0.05, opts, kZ);
        o.pass = o.pass && d.reports.size() == 3;
        double worst = 0.0;
        for (const auto& r : d.reports) {
            o.pass = o.pass && r.pass;
            worst = std::max(worst, std::abs(r.z_score));
            o.serialized += serialize(r);
        }
        char buf[48];
        std::snprintf(buf, sizeof buf, "%st=%.2f max|z|=%.2f", o.detail.empty() ? "" : "; ", t,
                      worst);
        o.detail += buf;
    }
    return o;
}

// Non-increasing within error bars and final below half the initial.
Outcome decay_criterion(const ScalingReport& r) {
    return {r.monotone && r.final_over_initial < 0.5, residuals(r), serialize(r)};
}

Outcome criterion_snr(const RunOptions& opts) {
    auto tmpl = grid_template(0.0);
    tmpl.params.sub_set_size.reset();
    return decay_criterion(check_snr_immse(binary_prior(), kGrid, tmpl, plan_of(4000), opts));
}

Outcome criterion_lemma1(const RunOptions& opts) {
    const auto reps = check_lemma_mmse_relation(binary_prior(), grid_template(0.01), kGrid, {1.0},
                                                plan_of(16000), opts);
    return decay_criterion(reps.at(0));
}

Outcome criterion_lemma2(const RunOptions& opts) {
    const auto r = check_mmse_variation(binary_prior(), grid_template(0.01), kGrid, plan_of(2000), opts);
    const bool decreasing = r.monotone && r.points.back().residual.mean < r.points.front().residual.mean;
    return {decreasing, residuals(r), serialize(r)};
}

Outcome criterion_alpha_log(const RunOptions& opts) {
    auto tmpl = grid_template(0.0);
    tmpl.params.sub_set_size = 0;
    const std::vector<std::size_t> grid{8, 12, 16};
    const auto a = check_alpha_immse(binary_prior(), tmpl, grid, plan_of(2000), 1, opts, kZ);
    const auto g = check_log_identity(binary_prior(), tmpl, grid, plan_of(2000), 0.02, 1, opts, kZ);
    Outcome o;
    o.pass = a.relation.pass && g.relation.pass && a.scaling.pass && g.scaling.pass;
    o.detail = zs(a.relation) + " [" + residuals(a.scaling) + "]; " + zs(g.relation) + " [" +
               residuals(g.scaling) + "]";
    o.serialized = serialize(a.relation) + serialize(a.scaling) + serialize(g.relation) +
                   serialize(g.scaling);
    return o;
}

Outcome criterion_concentration(const RunOptions& opts) {
    auto tmpl = grid_template(0.0);
    tmpl.params.sub_set_size.reset();
    const auto r = concentration_scan(binary_prior(), tmpl, kGrid, HWindow{0.05, 0.5, 5},
                                      plan_of(2000), opts);
    char buf[80];
    std::snprintf(buf, sizeof buf, ", slope %.2f [%.2f, %.2f]", r.slope, r.slope_lo, r.slope_hi);
    return {r.monotone && r.slope_valid && r.slope_hi < 0.0, residuals(r) + buf, serialize(r)};
}

Outcome criterion_path(const RunOptions& opts) {
    const auto res = integrate_path(setting(0.0, 0.01), binary_prior(), plan_of(2000),
                                    uniform_grid(0.0, 1.0, 11), opts, kZ);
    const auto& r = res.quadrature_vs_direct;
    char buf[64];
    std::snprintf(buf, sizeof buf, ", quadrature bias %.1e", r.bias_bound);
    std::string s = serialize(r);
    for (const auto& p : res.points) s += "path_point," + format_double(p.t) + "," + est(p.dt_est) + "\n";
    return {r.pass, zs(r) + buf, s};
}

Outcome criterion_performance() {
    ModelParams p;
    p.L = 16;
    p.M = 8;
    p.sub_set_size = 1;
    const auto prior = binary_prior();
    const auto inst = sample_instance(p, prior, {kSeed, 0, 0});
    enumerate_posterior(inst, p, prior);
    double best = INFINITY;
    for (int rep = 0; rep < 5; ++rep) {
        const auto t0 = Clock::now();
        enumerate_posterior(inst, p, prior);
        best = std::min(best, 1e3 * seconds_since(t0));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ms per call (best of 5)", best);
    return {best <= 50.0, buf, {}};
}

struct Criterion {
    int id;
    const char* title;
    double limit_s;  // runtime bound; 0 for none
    std::function<Outcome(const RunOptions&)> run;
    bool replay;     // part of the determinism comparison
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", 10, [](const RunOptions&) { return criterion_oracle(); }, false},
        {2, "nishimori suite", 120, criterion_nishimori, true},
        {3, "canonical I-MMSE", 120, criterion_canonical, true},
        {4, "t-derivative forms", 300, criterion_dt, true},
        {5, "snr I-MMSE scaling", 1200, criterion_snr, true},
        {6, "sub-extensive MMSE relation scaling", 1200, criterion_lemma1, true},
        {7, "MMSE variation along the path", 1200, criterion_lemma2, true},
        {8, "alpha I-MMSE and log identity", 1800, criterion_alpha_log, true},
        {9, "overlap concentration", 1200, criterion_concentration, true},
        {10, "path reconstruction", 600, criterion_path, true},
        {11, "enumeration performance", 0, [](const RunOptions&) { return criterion_performance(); },
         false},
    };

    RunOptions serial;
    serial.workers = 1;
    RunOptions parallel;
    parallel.workers = 8;

    bool all = true;
    std::string first_run, second_run;
    auto line = [&](int id, const char* title, bool pass, const std::string& detail) {
        std::printf("%s criterion %2d: %s: %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
        std::fflush(stdout);
        all = all && pass;
    };

    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run(serial);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what(), {}};
        }
        const double secs = seconds_since(t0);
        char buf[48];
        std::snprintf(buf, sizeof buf, " [%.1f s]", secs);
        const bool in_time = c.limit_s <= 0.0 || secs < c.limit_s;
        line(c.id, c.title, o.pass && in_time, o.detail + buf + (in_time ? "" : " over time limit"));
        if (c.replay) first_run += o.serialized;
    }

    const auto t0 = Clock::now();
    std::size_t mismatched = 0;
    std::string which;
    for (const auto& c : criteria) {
        if (!c.replay) continue;
        std::string again;
        try {
            again = c.run(parallel).serialized;
        } catch (const std::exception& e) {
            again = e.what();
        }
        const std::size_t pos = second_run.size();
        second_run += again;
        if (first_run.compare(pos, again.size(), again) != 0) {
            ++mismatched;
            which += " " + std::to_string(c.id);
        }
    }
    const bool identical = first_run == second_run && !first_run.empty();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu bytes compared, 1 vs 8 workers [%.1f s]", first_run.size(),
                  seconds_since(t0));
    line(12, "determinism across workers", identical,
         std::string(buf) + (mismatched ? ", mismatch in criteria" + which : ""));

    std::printf("overall %s\n", all ? "PASS" : "FAIL");
    return all ? 0 : 1;
}
