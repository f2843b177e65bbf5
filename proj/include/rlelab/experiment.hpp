#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rlelab/interpolation.hpp"
#include "rlelab/relations.hpp"

namespace rlelab {

struct VerifyTask {
    std::vector<std::string> relations{"nishimori", "canonical_immse", "dt_derivative", "moments"};
    std::optional<double> fd_step;   // in 1/delta; default 2% of 1/delta
    double dt_fd_step = 0.05;        // in t
    std::vector<double> t_values;    // default: model t if > 0, else {0.25, 0.5, 0.75}
};

struct SweepTask {
    std::string parameter = "delta";  // L, M, delta, t, h or sub_set_size
    std::vector<double> values;
    std::vector<std::string> quantities{"mutual_info", "mmse"};
};

struct ScalingTask {
    std::vector<std::string> relations{"snr_immse",     "lemma_mmse_relation", "mmse_variation",
                                       "alpha_immse",   "log_identity",        "concentration"};
    std::vector<std::size_t> L_grid{4, 8, 12, 16};
    std::optional<double> alpha;      // default M / N of the model
    std::vector<double> t_values{1.0};
    double h = 0.01;                  // for the interpolation-path relations
    std::size_t dM = 1;
    std::optional<double> fd_step;    // in 1/delta; default 2% of 1/delta
    HWindow h_window;
};

struct PathTask {
    std::vector<double> t_grid;       // default uniform with t_points points
    std::size_t t_points = 11;
};

struct ExperimentConfig {
    std::string task;
    Prior prior;
    ModelParams model;
    SamplingPlan plan;
    std::size_t workers = 0;
    double threshold = kDefaultZThreshold;
    std::string output_dir;
    VerifyTask verify;
    SweepTask sweep;
    ScalingTask scaling;
    PathTask path;
};

// Throws Error(Config) on any schema violation, including unknown keys.
// task_override, when non-empty, must agree with a "task" key if present.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& task_override = {});
ExperimentConfig load_config(const std::string& path, const std::string& task_override = {});

// Every effective setting, defaults filled in; parse_config accepts it back.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

inline constexpr const char* kCsvHeader =
    "task,relation,L,B,M,delta,t,h,sub_set_size,lhs_mean,lhs_se,rhs_mean,rhs_se,residual,"
    "combined_error,z_score,pass,n_samples,base_seed";

struct ResultRow {
    std::string task;
    std::string relation;
    ModelParams params;
    EstimateWithError lhs;
    EstimateWithError rhs;
    double residual = 0.0;
    double combined_error = 0.0;
    double z_score = 0.0;
    bool pass = true;
    std::size_t n_samples = 0;
    std::uint64_t base_seed = 0;
};

struct ExperimentOutcome {
    std::vector<ResultRow> rows;
    std::vector<std::string> report;  // lines of report.txt after the header
    std::vector<std::uint64_t> digests;
    bool all_pass = true;
};

// Shifts the named relation so that it fails; used to exercise exit codes.
struct FaultInjection {
    std::string relation;
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts,
                                 const std::optional<FaultInjection>& fault = std::nullopt);

std::string format_csv(const ExperimentOutcome& out);
std::string format_report(const ExperimentConfig& cfg, const ExperimentOutcome& out);
nlohmann::json make_manifest(const ExperimentConfig& cfg, const ExperimentOutcome& out,
                             const RunOptions& opts);

// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

}  // namespace rlelab
