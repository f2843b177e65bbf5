// rlelab: configuration-driven front end.
//
//   rlelab <verify|sweep|scaling|path> --config cfg.json --out dir [--workers n] [--seed s]
//
// Exit status: 0 when every pass flag is true, 2 when an identity fails,
// 1 on usage, configuration or enumeration-budget errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rlelab/error.hpp"
#include "rlelab/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitFail = 2;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::string inject_fault;
};

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw rlelab::Error(rlelab::ErrorCode::Config, "cannot write " + path.string());
    f << text;
    if (!f) throw rlelab::Error(rlelab::ErrorCode::Config, "cannot write " + path.string());
}

std::uint64_t budget_from_env() {
    const char* v = std::getenv("RLELAB_ENUM_BUDGET");
    if (!v || !*v) return rlelab::kDefaultEnumerationBudget;
    try {
        std::size_t pos = 0;
        const unsigned long long b = std::stoull(v, &pos);
        if (pos != std::string(v).size() || b == 0) throw std::invalid_argument(v);
        return b;
    } catch (const std::exception&) {
        throw rlelab::Error(rlelab::ErrorCode::Config,
                            std::string("RLELAB_ENUM_BUDGET must be a positive integer, got '") +
                                v + "'");
    }
}

int run_task(const std::string& task, const Options& o) {
    fs::path out_dir = o.out;
    try {
        auto cfg = rlelab::load_config(o.config, task);
        if (!o.out.empty()) cfg.output_dir = o.out;
        if (cfg.output_dir.empty())
            throw rlelab::Error(rlelab::ErrorCode::Config, "no output directory (--out)");
        out_dir = cfg.output_dir;
        fs::create_directories(out_dir);
        if (o.seed) cfg.plan.base_seed = *o.seed;
        if (o.workers) cfg.workers = *o.workers;

        rlelab::RunOptions opts;
        opts.workers = cfg.workers;
        opts.budget = budget_from_env();
        std::optional<rlelab::FaultInjection> fault;
        if (!o.inject_fault.empty()) fault = rlelab::FaultInjection{o.inject_fault};

        const auto outcome = rlelab::run_experiment(cfg, opts, fault);
        write_file(out_dir / "results.csv", rlelab::format_csv(outcome));
        write_file(out_dir / "report.txt", rlelab::format_report(cfg, outcome));
        write_file(out_dir / "manifest.json",
                   rlelab::make_manifest(cfg, outcome, opts).dump(2) + "\n");
        std::cout << "overall " << (outcome.all_pass ? "PASS" : "FAIL") << ", outputs in "
                  << out_dir.string() << '\n';
        return outcome.all_pass ? kExitPass : kExitFail;
    } catch (const rlelab::Error& e) {
        const std::string msg = std::string("error: ") + rlelab::to_string(e.code()) + ": " + e.what();
        std::cerr << msg << '\n';
        if (!out_dir.empty()) {
            std::error_code ec;
            fs::create_directories(out_dir, ec);
            std::ofstream(out_dir / "report.txt", std::ios::trunc) << msg << '\n';
        }
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact-enumeration laboratory for random linear estimation identities"};
    app.set_version_flag("--version", std::string(RLELAB_VERSION));
    app.require_subcommand(1);

    Options o;
    std::string chosen;
    for (const char* name : {"verify", "sweep", "scaling", "path"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " task");
        sub->add_option("--config", o.config, "JSON experiment configuration")->required();
        sub->add_option("--out", o.out, "output directory (overrides output_dir)");
        sub->add_option("--workers", o.workers, "worker threads (0: all cores)");
        sub->add_option("--seed", o.seed, "base seed (overrides plan.base_seed)");
        sub->add_option("--inject-fault", o.inject_fault)->group("");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }
    return run_task(chosen, o);
}
