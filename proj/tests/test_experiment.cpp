#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "rlelab/error.hpp"
#include "rlelab/experiment.hpp"

using namespace rlelab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const json& doc, const std::string& task = "verify") {
    try {
        parse_config(doc, task);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a configuration error");
    return ErrorCode::InvalidArgument;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("rlelab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

#ifdef RLELAB_CLI_PATH
int run_cli(const std::string& args, const std::string& env = {}) {
    const std::string cmd = env + " \"" RLELAB_CLI_PATH "\" " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}
#endif

const char* kSmallVerify =
    R"({"model":{"L":6,"M":6,"t":0.5,"h":0.01,"sub_set_size":1},
        "plan":{"n_samples":200,"base_seed":3}})";

}  // namespace

TEST_CASE("parse_config: defaults") {
    const auto cfg = parse_config(json::object(), "verify");
    CHECK(cfg.task == "verify");
    CHECK(cfg.model.L == 8);
    CHECK(cfg.model.B == 1);
    CHECK(cfg.model.M == 8);
    CHECK(cfg.prior.num_atoms() == 2);
    CHECK(cfg.threshold == 4.0);
}

TEST_CASE("parse_config: schema violations") {
    CHECK(code_of(json::parse(R"({"model":{"L":8,"foo":1}})")) == ErrorCode::Config);
    CHECK(code_of(json::parse(R"({"bogus":1})")) == ErrorCode::Config);
    CHECK(code_of(json::parse(R"({"model":{"L":"eight"}})")) == ErrorCode::Config);
    CHECK(code_of(json::parse(R"({"task":"path"})"), "verify") == ErrorCode::Config);
    CHECK(code_of(json::parse(R"({"prior":{"atoms":[[1],[2]],"weights":[1]}})")) ==
          ErrorCode::Config);
    CHECK(code_of(json::parse(R"({"plan":{"n_samples":0}})")) == ErrorCode::Config);
    CHECK(code_of(json::parse(R"({"scaling":{"L_grid":[8,4,12]}})"), "scaling") ==
          ErrorCode::Config);
}

TEST_CASE("config_to_json: round trip") {
    const auto doc = json::parse(R"({
        "prior":{"atoms":[[1,0],[0,1],[-1,-1]],"weights":[0.2,0.3,0.5]},
        "model":{"L":5,"B":2,"M":7,"delta":0.5,"t":0.25,"h":0.1,"u":0.3},
        "plan":{"n_samples":123,"base_seed":9,"crn_tag":"abc","workers":2},
        "scaling":{"L_grid":[3,5,7],"t_values":[0.5,1.0],"h":0.02,"dM":2,
                   "h_window":{"lo":0.1,"hi":0.4,"points":4}},
        "threshold":3.5})");
    const auto a = parse_config(doc, "scaling");
    const auto j = config_to_json(a);
    const auto b = parse_config(j, "scaling");
    CHECK(config_to_json(b) == j);
    CHECK(b.model.M == 7);
    CHECK(b.model.B == 2);
    CHECK(b.plan.crn_tag == "abc");
    CHECK(b.scaling.dM == 2);
    CHECK(b.scaling.h_window.points == 4);
    CHECK(b.threshold == 3.5);
    CHECK(b.prior.weight(2) == doctest::Approx(0.5));
}

TEST_CASE("run_experiment: verify on a one-atom prior is exact") {
    auto cfg = parse_config(json::parse(
        R"({"prior":{"atoms":[[0.5]],"weights":[1]},
            "model":{"L":5,"M":5,"t":0.5,"h":0.01,"sub_set_size":1},
            "plan":{"n_samples":30,"base_seed":3}})"), "verify");
    const auto out = run_experiment(cfg, RunOptions{1});
    CHECK(out.all_pass);
    CHECK_FALSE(out.rows.empty());
    for (const auto& r : out.rows) {
        INFO(r.relation);
        CHECK(r.residual == 0.0);
    }
    const auto csv = format_csv(out);
    CHECK(csv.rfind(kCsvHeader, 0) == 0);
    const auto rep = format_report(cfg, out);
    CHECK(rep.find("overall PASS") != std::string::npos);
}

TEST_CASE("run_experiment: fault injection flips the verdict") {
    auto cfg = parse_config(json::parse(kSmallVerify), "verify");
    const auto out = run_experiment(cfg, RunOptions{1}, FaultInjection{"canonical_immse"});
    CHECK_FALSE(out.all_pass);
}

TEST_CASE("format_double") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(-INFINITY) == "-inf");
}

#ifdef RLELAB_CLI_PATH
TEST_CASE("cli: exit codes, determinism and manifest replay") {
    const auto dir = scratch("cli");
    write(dir / "ok.json", kSmallVerify);
    write(dir / "bad.json", R"({"model":{"L":8,"foo":1}})");

    const auto o1 = dir / "w1", o8 = dir / "w8";
    CHECK(run_cli("verify --config " + (dir / "ok.json").string() + " --out " + o1.string() +
                  " --workers 1") == 0);
    CHECK(run_cli("verify --config " + (dir / "ok.json").string() + " --out " + o8.string() +
                  " --workers 8") == 0);
    const auto csv1 = slurp(o1 / "results.csv");
    CHECK_FALSE(csv1.empty());
    CHECK(csv1 == slurp(o8 / "results.csv"));
    CHECK(fs::exists(o1 / "report.txt"));

    // The manifest's config reproduces the run.
    const auto manifest = json::parse(slurp(o1 / "manifest.json"));
    CHECK(manifest.contains("instance_digest"));
    write(dir / "replay.json", manifest.at("config").dump());
    const auto orep = dir / "replay";
    CHECK(run_cli("verify --config " + (dir / "replay.json").string() + " --out " +
                  orep.string()) == 0);
    CHECK(slurp(orep / "results.csv") == csv1);

    CHECK(run_cli("verify --config " + (dir / "ok.json").string() + " --out " +
                  (dir / "fault").string() + " --inject-fault canonical_immse") == 2);

    CHECK(run_cli("verify --config " + (dir / "bad.json").string() + " --out " +
                  (dir / "bad").string()) == 1);
    CHECK(slurp(dir / "bad" / "report.txt").find("config_error") != std::string::npos);

    const auto ob = dir / "budget";
    CHECK(run_cli("verify --config " + (dir / "ok.json").string() + " --out " + ob.string(),
                  "RLELAB_ENUM_BUDGET=10") == 1);
    CHECK(slurp(ob / "report.txt").find("enumeration_budget_exceeded") != std::string::npos);

    CHECK(run_cli("") == 1);
    CHECK(run_cli("verify") == 1);
    CHECK(run_cli("verify --config " + (dir / "missing.json").string() + " --out " +
                  (dir / "missing").string()) == 1);
    fs::remove_all(dir);
}
#endif
