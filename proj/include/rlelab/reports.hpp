#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rlelab/model.hpp"
#include "rlelab/quenched.hpp"
#include "rlelab/stats.hpp"

namespace rlelab {

inline constexpr double kDefaultZThreshold = 4.0;

// Verdict of an identity that holds exactly in quenched expectation.
struct RelationReport {
    std::string name;
    EstimateWithError lhs;
    EstimateWithError rhs;
    double residual = 0.0;        // lhs.mean - rhs.mean
    double bias_bound = 0.0;      // finite-difference or quadrature bias, already in combined_error
    double combined_error = 0.0;  // sqrt(lhs.se^2 + rhs.se^2) + bias_bound
    double z_score = 0.0;
    double threshold = kDefaultZThreshold;
    bool pass = false;
    ModelParams params;
    SamplingPlan plan;
    std::uint64_t instance_digest = 0;
    std::vector<std::string> notes;
};

RelationReport make_relation_report(std::string name, const EstimateWithError& lhs,
                                    const EstimateWithError& rhs, double bias_bound,
                                    const ModelParams& params, const SamplingPlan& plan,
                                    double threshold = kDefaultZThreshold);

// Recomputes residual, combined error, z-score and pass from the fields.
void finalize(RelationReport& r);

struct ScalingPoint {
    std::size_t L = 0;
    ModelParams params;
    EstimateWithError lhs;
    EstimateWithError rhs;
    EstimateWithError residual;  // magnitude of the residual, se from the paired samples
};

// Decay of an o_L(1) residual over an L-grid.
struct ScalingReport {
    std::string name;
    std::vector<std::size_t> L_grid;
    std::vector<ScalingPoint> points;
    double slope = 0.0;
    double slope_lo = 0.0;
    double slope_hi = 0.0;
    bool slope_valid = false;
    bool monotone = false;  // each step r_{k+1} <= r_k + 2 sqrt(se_k^2 + se_{k+1}^2)
    bool pass = false;      // monotone || slope_hi < 0
    double final_over_initial = 0.0;
    SamplingPlan plan;
    std::uint64_t instance_digest = 0;
    std::vector<std::string> notes;
};

// Fills slope, monotone, pass and final_over_initial from points.
void finalize(ScalingReport& r);

// Parameters of an L-grid run: everything but L and M is copied from params;
// M = round(alpha * L * B).
struct GridTemplate {
    ModelParams params;
    double alpha = 1.0;

    ModelParams at(std::size_t L) const;
};

void validate_grid(const std::vector<std::size_t>& L_grid);

}  // namespace rlelab
