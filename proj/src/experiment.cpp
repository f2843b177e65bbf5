#include "rlelab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rlelab/error.hpp"

namespace rlelab {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) config_error(where + " must be an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) config_error("unknown key '" + item.key() + "' in " + where);
}

double get_number(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) config_error(where + "." + key + " must be a number");
    return v.get<double>();
}

std::size_t get_count(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) config_error(where + "." + key + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

std::uint64_t get_u64(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) config_error(where + "." + key + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_string()) config_error(where + "." + key + " must be a string");
    return v.get<std::string>();
}

std::vector<double> get_numbers(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_array()) config_error(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) config_error(where + "." + key + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::size_t> get_counts(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_array()) config_error(where + "." + key + " must be an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
        if (!e.is_number_unsigned())
            config_error(where + "." + key + " must be an array of nonnegative integers");
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

std::vector<std::string> get_names(const json& obj, const char* key, const std::string& where,
                                   const std::set<std::string>& allowed) {
    const auto& v = obj.at(key);
    if (!v.is_array()) config_error(where + "." + key + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) config_error(where + "." + key + " must be an array of strings");
        const auto s = e.get<std::string>();
        if (!allowed.count(s)) config_error("unknown entry '" + s + "' in " + where + "." + key);
        out.push_back(s);
    }
    return out;
}

const std::set<std::string> kTasks{"verify", "sweep", "scaling", "path"};
const std::set<std::string> kVerifyRelations{"nishimori", "canonical_immse", "dt_derivative",
                                             "moments"};
const std::set<std::string> kSweepParameters{"L", "M", "delta", "t", "h", "sub_set_size"};
const std::set<std::string> kSweepQuantities{"mutual_info", "mmse", "measurement_mmse",
                                             "sub_measurement_mmse", "overlap"};
const std::set<std::string> kScalingRelations{"snr_immse",   "lemma_mmse_relation",
                                              "mmse_variation", "alpha_immse",
                                              "log_identity",   "concentration"};

Prior parse_prior(const json& j) {
    check_keys(j, {"atoms", "weights"}, "prior");
    if (!j.contains("atoms") || !j.contains("weights"))
        config_error("prior needs both atoms and weights");
    const auto& a = j.at("atoms");
    if (!a.is_array()) config_error("prior.atoms must be an array of arrays");
    std::vector<std::vector<double>> atoms;
    for (const auto& row : a) {
        if (!row.is_array()) config_error("prior.atoms must be an array of arrays");
        std::vector<double> r;
        for (const auto& e : row) {
            if (!e.is_number()) config_error("prior.atoms entries must be numbers");
            r.push_back(e.get<double>());
        }
        atoms.push_back(std::move(r));
    }
    try {
        return make_prior(atoms, get_numbers(j, "weights", "prior"));
    } catch (const Error& e) {
        config_error(std::string("prior: ") + e.what());
    }
}

ModelParams parse_model(const json& j, const Prior& prior) {
    check_keys(j, {"L", "B", "M", "delta", "t", "h", "u", "sub_set_size"}, "model");
    ModelParams p;
    p.B = prior.section_dim();
    p.L = j.contains("L") ? get_count(j, "L", "model") : 8;
    if (j.contains("B")) {
        p.B = get_count(j, "B", "model");
        if (p.B != prior.section_dim())
            config_error("model.B = " + std::to_string(p.B) +
                         " does not match the prior section dimension " +
                         std::to_string(prior.section_dim()));
    }
    p.M = j.contains("M") ? get_count(j, "M", "model") : p.L * p.B;
    if (j.contains("delta")) p.delta = get_number(j, "delta", "model");
    if (j.contains("t")) p.t = get_number(j, "t", "model");
    if (j.contains("h")) p.h = get_number(j, "h", "model");
    if (j.contains("u")) p.u = get_number(j, "u", "model");
    if (j.contains("sub_set_size") && !j.at("sub_set_size").is_null())
        p.sub_set_size = get_count(j, "sub_set_size", "model");
    try {
        p.validate_against(prior);
    } catch (const Error& e) {
        config_error(std::string("model: ") + e.what());
    }
    return p;
}

std::optional<double> parse_fd_step(const json& j, const std::string& where) {
    if (!j.contains("fd_step") || j.at("fd_step").is_null()) return std::nullopt;
    const double s = get_number(j, "fd_step", where);
    if (!(s > 0.0)) config_error(where + ".fd_step must be > 0");
    return s;
}

void check_t_values(const std::vector<double>& ts, const std::string& where) {
    for (double t : ts)
        if (!(t >= 0.0 && t <= 1.0)) config_error(where + " entries must lie in [0, 1]");
}

json prior_to_json(const Prior& prior) {
    json atoms = json::array();
    for (std::size_t k = 0; k < prior.num_atoms(); ++k) {
        const auto a = prior.atom(k);
        atoms.push_back(std::vector<double>(a.begin(), a.end()));
    }
    return {{"atoms", atoms}, {"weights", prior.weights()}};
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::string& task_override) {
    try {
        check_keys(doc,
                   {"task", "output_dir", "threshold", "prior", "model", "plan", "verify", "sweep",
                    "scaling", "path"},
                   "config");
        ExperimentConfig cfg;
        if (doc.contains("task")) cfg.task = get_string(doc, "task", "config");
        if (!task_override.empty()) {
            if (!cfg.task.empty() && cfg.task != task_override)
                config_error("config task '" + cfg.task + "' does not match subcommand '" +
                             task_override + "'");
            cfg.task = task_override;
        }
        if (cfg.task.empty()) config_error("no task given");
        if (!kTasks.count(cfg.task)) config_error("unknown task '" + cfg.task + "'");

        if (doc.contains("output_dir")) cfg.output_dir = get_string(doc, "output_dir", "config");
        if (doc.contains("threshold")) {
            cfg.threshold = get_number(doc, "threshold", "config");
            if (!(cfg.threshold > 0.0)) config_error("threshold must be > 0");
        }
        cfg.prior = doc.contains("prior") ? parse_prior(doc.at("prior")) : binary_prior();
        cfg.model = parse_model(doc.contains("model") ? doc.at("model") : json::object(), cfg.prior);

        if (doc.contains("plan")) {
            const auto& j = doc.at("plan");
            check_keys(j, {"n_samples", "base_seed", "crn_tag", "workers"}, "plan");
            if (j.contains("n_samples")) cfg.plan.n_samples = get_count(j, "n_samples", "plan");
            if (j.contains("base_seed")) cfg.plan.base_seed = get_u64(j, "base_seed", "plan");
            if (j.contains("crn_tag")) cfg.plan.crn_tag = get_string(j, "crn_tag", "plan");
            if (j.contains("workers")) cfg.workers = get_count(j, "workers", "plan");
        }
        if (cfg.plan.n_samples < 1) config_error("plan.n_samples must be >= 1");

        if (doc.contains("verify")) {
            const auto& j = doc.at("verify");
            check_keys(j, {"relations", "fd_step", "dt_fd_step", "t_values"}, "verify");
            if (j.contains("relations"))
                cfg.verify.relations = get_names(j, "relations", "verify", kVerifyRelations);
            cfg.verify.fd_step = parse_fd_step(j, "verify");
            if (j.contains("dt_fd_step")) cfg.verify.dt_fd_step = get_number(j, "dt_fd_step", "verify");
            if (j.contains("t_values")) cfg.verify.t_values = get_numbers(j, "t_values", "verify");
        }
        if (cfg.verify.t_values.empty()) {
            if (cfg.model.t > 0.0)
                cfg.verify.t_values = {cfg.model.t};
            else
                cfg.verify.t_values = {0.25, 0.5, 0.75};
        }
        check_t_values(cfg.verify.t_values, "verify.t_values");
        for (double t : cfg.verify.t_values)
            if (!(t > 0.0)) config_error("verify.t_values entries must be > 0");

        if (doc.contains("sweep")) {
            const auto& j = doc.at("sweep");
            check_keys(j, {"parameter", "values", "quantities"}, "sweep");
            if (j.contains("parameter")) cfg.sweep.parameter = get_string(j, "parameter", "sweep");
            if (j.contains("values")) cfg.sweep.values = get_numbers(j, "values", "sweep");
            if (j.contains("quantities"))
                cfg.sweep.quantities = get_names(j, "quantities", "sweep", kSweepQuantities);
        }
        if (!kSweepParameters.count(cfg.sweep.parameter))
            config_error("unknown sweep parameter '" + cfg.sweep.parameter + "'");
        if (cfg.task == "sweep" && cfg.sweep.values.empty()) config_error("sweep.values is empty");

        if (doc.contains("scaling")) {
            const auto& j = doc.at("scaling");
            check_keys(j,
                       {"relations", "L_grid", "alpha", "t_values", "h", "dM", "fd_step",
                        "h_window"},
                       "scaling");
            if (j.contains("relations"))
                cfg.scaling.relations = get_names(j, "relations", "scaling", kScalingRelations);
            if (j.contains("L_grid")) cfg.scaling.L_grid = get_counts(j, "L_grid", "scaling");
            if (j.contains("alpha") && !j.at("alpha").is_null())
                cfg.scaling.alpha = get_number(j, "alpha", "scaling");
            if (j.contains("t_values")) cfg.scaling.t_values = get_numbers(j, "t_values", "scaling");
            if (j.contains("h")) cfg.scaling.h = get_number(j, "h", "scaling");
            if (j.contains("dM")) cfg.scaling.dM = get_count(j, "dM", "scaling");
            cfg.scaling.fd_step = parse_fd_step(j, "scaling");
            if (j.contains("h_window")) {
                const auto& w = j.at("h_window");
                check_keys(w, {"lo", "hi", "points"}, "scaling.h_window");
                if (w.contains("lo")) cfg.scaling.h_window.lo = get_number(w, "lo", "scaling.h_window");
                if (w.contains("hi")) cfg.scaling.h_window.hi = get_number(w, "hi", "scaling.h_window");
                if (w.contains("points"))
                    cfg.scaling.h_window.points = get_count(w, "points", "scaling.h_window");
            }
        }
        if (!cfg.scaling.alpha) cfg.scaling.alpha = cfg.model.alpha();
        if (!(*cfg.scaling.alpha >= 0.0)) config_error("scaling.alpha must be >= 0");
        check_t_values(cfg.scaling.t_values, "scaling.t_values");
        if (!(cfg.scaling.h > 0.0)) config_error("scaling.h must be > 0");
        if (cfg.scaling.dM < 1) config_error("scaling.dM must be >= 1");
        const auto& w = cfg.scaling.h_window;
        if (!(w.lo > 0.0 && w.hi > w.lo) || w.points < 2)
            config_error("scaling.h_window must satisfy 0 < lo < hi with points >= 2");
        try {
            validate_grid(cfg.scaling.L_grid);
        } catch (const Error& e) {
            config_error(std::string("scaling.L_grid: ") + e.what());
        }

        if (doc.contains("path")) {
            const auto& j = doc.at("path");
            check_keys(j, {"t_grid", "t_points"}, "path");
            if (j.contains("t_grid")) cfg.path.t_grid = get_numbers(j, "t_grid", "path");
            if (j.contains("t_points")) cfg.path.t_points = get_count(j, "t_points", "path");
        }
        if (cfg.path.t_grid.empty()) {
            if (cfg.path.t_points < 2) config_error("path.t_points must be >= 2");
            cfg.path.t_grid = uniform_grid(0.0, 1.0, cfg.path.t_points);
        }
        cfg.path.t_points = cfg.path.t_grid.size();
        check_t_values(cfg.path.t_grid, "path.t_grid");
        return cfg;
    } catch (const json::exception& e) {
        config_error(std::string("malformed config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path, const std::string& task_override) {
    std::ifstream in(path);
    if (!in) config_error("cannot read config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        config_error("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc, task_override);
}

json config_to_json(const ExperimentConfig& cfg) {
    const auto& m = cfg.model;
    json model = {{"L", m.L}, {"B", m.B}, {"M", m.M}, {"delta", m.delta},
                  {"t", m.t}, {"h", m.h}, {"u", m.u}};
    if (m.sub_set_size) model["sub_set_size"] = *m.sub_set_size;
    json verify = {{"relations", cfg.verify.relations},
                   {"dt_fd_step", cfg.verify.dt_fd_step},
                   {"t_values", cfg.verify.t_values}};
    if (cfg.verify.fd_step) verify["fd_step"] = *cfg.verify.fd_step;
    json scaling = {{"relations", cfg.scaling.relations},
                    {"L_grid", cfg.scaling.L_grid},
                    {"alpha", *cfg.scaling.alpha},
                    {"t_values", cfg.scaling.t_values},
                    {"h", cfg.scaling.h},
                    {"dM", cfg.scaling.dM},
                    {"h_window",
                     {{"lo", cfg.scaling.h_window.lo},
                      {"hi", cfg.scaling.h_window.hi},
                      {"points", cfg.scaling.h_window.points}}}};
    if (cfg.scaling.fd_step) scaling["fd_step"] = *cfg.scaling.fd_step;
    json doc = {{"task", cfg.task},
                {"threshold", cfg.threshold},
                {"prior", prior_to_json(cfg.prior)},
                {"model", model},
                {"plan",
                 {{"n_samples", cfg.plan.n_samples},
                  {"base_seed", cfg.plan.base_seed},
                  {"crn_tag", cfg.plan.crn_tag},
                  {"workers", cfg.workers}}},
                {"verify", verify},
                {"sweep",
                 {{"parameter", cfg.sweep.parameter},
                  {"values", cfg.sweep.values},
                  {"quantities", cfg.sweep.quantities}}},
                {"scaling", scaling},
                {"path", {{"t_grid", cfg.path.t_grid}}}};
    if (!cfg.output_dir.empty()) doc["output_dir"] = cfg.output_dir;
    return doc;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string brief(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string where(const ModelParams& p) {
    return "L=" + std::to_string(p.L) + " M=" + std::to_string(p.M) + " delta=" + brief(p.delta) +
           " t=" + brief(p.t) + " h=" + brief(p.h) + " |S|=" + std::to_string(p.sub_size());
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class Collector {
public:
    Collector(const ExperimentConfig& cfg, const std::optional<FaultInjection>& fault)
        : cfg_(cfg), fault_(fault) {}

    void relation(RelationReport r) {
        if (fault_ && fault_->relation == r.name) {
            r.rhs.mean += 1.0 + 10.0 * r.combined_error;
            finalize(r);
            r.notes.push_back("fault injected");
        }
        ResultRow row;
        row.task = cfg_.task;
        row.relation = r.name;
        row.params = r.params;
        row.lhs = r.lhs;
        row.rhs = r.rhs;
        row.residual = r.residual;
        row.combined_error = r.combined_error;
        row.z_score = r.z_score;
        row.pass = r.pass;
        row.n_samples = r.plan.n_samples;
        row.base_seed = r.plan.base_seed;
        out.rows.push_back(row);
        out.digests.push_back(r.instance_digest);
        out.all_pass = out.all_pass && r.pass;
        out.report.push_back((r.pass ? "PASS " : "FAIL ") + r.name + " [" + where(r.params) +
                             "] lhs " + brief(r.lhs.mean) + " (se " + brief(r.lhs.std_error) +
                             ") rhs " + brief(r.rhs.mean) + " (se " + brief(r.rhs.std_error) +
                             ") residual " + brief(r.residual) + " combined " +
                             brief(r.combined_error) + " (bias " + brief(r.bias_bound) + ") z " +
                             brief(r.z_score));
        for (const auto& n : r.notes) out.report.push_back("    " + n);
    }

    void scaling(ScalingReport r) {
        if (fault_ && fault_->relation == r.name && !r.points.empty()) {
            r.points.back().residual.mean += 1.0;
            finalize(r);
            r.notes.push_back("fault injected");
        }
        for (const auto& p : r.points) {
            ResultRow row;
            row.task = cfg_.task;
            row.relation = r.name;
            row.params = p.params;
            row.lhs = p.lhs;
            row.rhs = p.rhs;
            row.residual = p.residual.mean;
            row.combined_error = p.residual.std_error;
            row.z_score = p.residual.mean == 0.0 ? 0.0 : p.residual.mean / p.residual.std_error;
            row.pass = r.pass;
            row.n_samples = r.plan.n_samples;
            row.base_seed = r.plan.base_seed;
            out.rows.push_back(row);
        }
        out.digests.push_back(r.instance_digest);
        out.all_pass = out.all_pass && r.pass;
        std::string grid;
        for (std::size_t L : r.L_grid) grid += (grid.empty() ? "" : ",") + std::to_string(L);
        out.report.push_back((r.pass ? "PASS " : "FAIL ") + r.name + " L=" + grid + " monotone " +
                             (r.monotone ? "yes" : "no") + " slope " +
                             (r.slope_valid ? brief(r.slope) + " [" + brief(r.slope_lo) + ", " +
                                                  brief(r.slope_hi) + "]"
                                            : std::string("n/a")) +
                             " final/initial " + brief(r.final_over_initial));
        for (const auto& p : r.points)
            out.report.push_back("    L=" + std::to_string(p.L) + " lhs " + brief(p.lhs.mean) +
                                 " rhs " + brief(p.rhs.mean) + " |residual| " +
                                 brief(p.residual.mean) + " (se " + brief(p.residual.std_error) +
                                 ")");
        for (const auto& n : r.notes) out.report.push_back("    " + n);
    }

    void estimate_row(const std::string& name, const ModelParams& p, const EstimateWithError& e) {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        ResultRow row;
        row.task = cfg_.task;
        row.relation = name;
        row.params = p;
        row.lhs = e;
        row.rhs = EstimateWithError{nan, nan, e.n_samples, e.base_seed};
        row.residual = row.combined_error = row.z_score = nan;
        row.pass = true;
        row.n_samples = e.n_samples;
        row.base_seed = e.base_seed;
        out.rows.push_back(row);
        out.report.push_back("     " + name + " [" + where(p) + "] " + brief(e.mean) + " (se " +
                             brief(e.std_error) + ")");
    }

    void line(std::string s) { out.report.push_back(std::move(s)); }

    ExperimentOutcome out;

private:
    const ExperimentConfig& cfg_;
    const std::optional<FaultInjection>& fault_;
};

bool wants(const std::vector<std::string>& list, const std::string& name) {
    return std::find(list.begin(), list.end(), name) != list.end();
}

std::size_t as_count(double v, const std::string& name) {
    if (!(v >= 0.0) || v != std::floor(v))
        config_error("sweep value " + brief(v) + " for " + name + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

void run_verify(const ExperimentConfig& cfg, const RunOptions& opts, Collector& c) {
    const auto& v = cfg.verify;
    const ModelParams& p = cfg.model;
    if (wants(v.relations, "nishimori")) {
        const bool ibp = p.t > 0.0 && p.sub_size() >= 1;
        for (auto& r : nishimori_suite(p, cfg.prior, cfg.plan, opts, cfg.threshold, ibp))
            c.relation(std::move(r));
        if (!ibp) c.line("SKIP nishimori_ibp: needs t > 0 and |S| >= 1");
    }
    if (wants(v.relations, "canonical_immse")) {
        ModelParams b = p;
        b.t = 0.0;
        b.h = 0.0;
        const double step = v.fd_step.value_or(0.02 / p.delta);
        c.relation(check_canonical_immse(b, cfg.prior, cfg.plan, step, opts, cfg.threshold));
    }
    if (wants(v.relations, "dt_derivative")) {
        for (double t : v.t_values) {
            ModelParams q = p;
            q.t = t;
            auto d = dt_derivative(q, cfg.prior, cfg.plan, v.dt_fd_step, opts, cfg.threshold);
            for (auto& r : d.reports) c.relation(std::move(r));
        }
    }
    if (wants(v.relations, "moments")) {
        for (const auto& m : signal_moment_envelope(p, cfg.prior, cfg.plan, opts))
            c.line(std::string(m.within ? "     " : "WARN ") + "signal moment n=" +
                   std::to_string(m.order) + " [" + where(p) + "] " + brief(m.moment.mean) +
                   " (se " + brief(m.moment.std_error) + ") envelope " + brief(m.envelope));
    }
}

void run_sweep(const ExperimentConfig& cfg, const RunOptions& opts, Collector& c) {
    const auto& s = cfg.sweep;
    for (double value : s.values) {
        ModelParams p = cfg.model;
        if (s.parameter == "L") p.L = as_count(value, "L");
        else if (s.parameter == "M") p.M = as_count(value, "M");
        else if (s.parameter == "delta") p.delta = value;
        else if (s.parameter == "t") p.t = value;
        else if (s.parameter == "h") p.h = value;
        else p.sub_set_size = as_count(value, "sub_set_size");
        try {
            p.validate_against(cfg.prior);
        } catch (const Error& e) {
            config_error(std::string("sweep value ") + brief(value) + ": " + e.what());
        }
        const auto obs = run_plan(p, cfg.prior, cfg.plan, opts);
        const auto seed = cfg.plan.base_seed;
        std::vector<std::uint64_t> h;
        for (const auto& o : obs) h.push_back(o.instance_hash);
        c.out.digests.push_back(combine_hashes(h));
        c.line("sweep " + s.parameter + "=" + brief(value));
        for (const auto& q : s.quantities) {
            if (q == "mutual_info") {
                c.estimate_row(q, p, estimate(column(obs, &InstanceObservables::mutual_info), seed));
            } else if (q == "mmse") {
                c.estimate_row(q, p, estimate(column(obs, &InstanceObservables::mmse), seed));
            } else if (q == "measurement_mmse") {
                RLELAB_REQUIRE(p.M > 0, ErrorCode::InvalidArgument,
                               "measurement MMSE needs at least one base row (M > 0)");
                c.estimate_row(q, p, estimate(column(obs, &InstanceObservables::meas_mmse), seed));
            } else if (q == "sub_measurement_mmse") {
                RLELAB_REQUIRE(p.sub_size() > 0, ErrorCode::InvalidArgument,
                               "sub-extensive measurement MMSE needs |S| >= 1");
                c.estimate_row(q, p,
                               estimate(column(obs, &InstanceObservables::sub_meas_mmse), seed));
            } else {
                const auto os = overlap_stats(obs, seed);
                c.estimate_row("overlap_mean", p, os.overlap_mean);
                c.estimate_row("overlap_fluctuation", p, os.fluctuation);
            }
        }
    }
}

void run_scaling(const ExperimentConfig& cfg, const RunOptions& opts, Collector& c) {
    const auto& s = cfg.scaling;
    GridTemplate base{cfg.model, *s.alpha};
    base.params.t = 0.0;
    base.params.h = 0.0;
    GridTemplate path{cfg.model, *s.alpha};
    path.params.h = s.h;
    GridTemplate nested = base;
    nested.params.L = s.L_grid.back();
    const double step = s.fd_step.value_or(0.02 / cfg.model.delta);

    for (const auto& name : s.relations) {
        if (name == "snr_immse") {
            c.scaling(check_snr_immse(cfg.prior, s.L_grid, base, cfg.plan, opts));
        } else if (name == "lemma_mmse_relation") {
            for (auto& r : check_lemma_mmse_relation(cfg.prior, path, s.L_grid, s.t_values,
                                                     cfg.plan, opts))
                c.scaling(std::move(r));
        } else if (name == "mmse_variation") {
            c.scaling(check_mmse_variation(cfg.prior, path, s.L_grid, cfg.plan, opts));
        } else if (name == "alpha_immse") {
            auto r = check_alpha_immse(cfg.prior, nested, s.L_grid, cfg.plan, s.dM, opts,
                                       cfg.threshold);
            c.relation(std::move(r.relation));
            c.scaling(std::move(r.scaling));
        } else if (name == "log_identity") {
            auto r = check_log_identity(cfg.prior, nested, s.L_grid, cfg.plan, step, s.dM, opts,
                                        cfg.threshold);
            c.relation(std::move(r.relation));
            c.scaling(std::move(r.scaling));
            c.line("     constituents at L=" + std::to_string(nested.params.L) + ": alpha_immse z " +
                   brief(r.alpha.z_score) + ", canonical_immse z " + brief(r.canonical.z_score));
        } else {
            GridTemplate conc{cfg.model, *s.alpha};
            c.scaling(concentration_scan(cfg.prior, conc, s.L_grid, s.h_window, cfg.plan, opts));
        }
    }
}

void run_path(const ExperimentConfig& cfg, const RunOptions& opts, Collector& c) {
    auto r = integrate_path(cfg.model, cfg.prior, cfg.plan, cfg.path.t_grid, opts, cfg.threshold);
    for (const auto& w : r.warnings) c.line("WARN " + w);
    for (const auto& pt : r.points) {
        ModelParams p = cfg.model;
        p.t = pt.t;
        c.line("     t=" + brief(pt.t) + " i " + brief(pt.i_est.mean) + " E " +
               brief(pt.e_est.mean) + " Y_S " + brief(pt.y_sub_est.mean) + " di/dt " +
               brief(pt.dt_est.mean) + " (se " + brief(pt.dt_est.std_error) + ")");
        if (pt.dt_direct_est) {
            auto rep = make_relation_report("path_dt_direct_vs_ibp", *pt.dt_direct_est, pt.dt_est,
                                            0.0, p, cfg.plan, cfg.threshold);
            rep.instance_digest = r.quadrature_vs_direct.instance_digest;
            c.relation(std::move(rep));
        }
    }
    c.relation(r.quadrature_vs_direct);
    const auto& cf = r.closed_form_vs_quadrature;
    c.line("     closed form " + brief(cf.lhs.mean) + " (se " + brief(cf.lhs.std_error) +
           ") vs quadrature " + brief(cf.rhs.mean) + ": residual " + brief(cf.residual) +
           ", z " + brief(cf.z_score) + " (asymptotic, not a pass criterion)");
    c.line("     rate ratio (i1 - i0) N/|S| " + brief(r.rate_ratio_lhs) + " vs (B/2) ln(1 + E0/delta) " +
           brief(r.rate_ratio_rhs));
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts,
                                 const std::optional<FaultInjection>& fault) {
    Collector c(cfg, fault);
    if (cfg.task == "verify")
        run_verify(cfg, opts, c);
    else if (cfg.task == "sweep")
        run_sweep(cfg, opts, c);
    else if (cfg.task == "scaling")
        run_scaling(cfg, opts, c);
    else
        run_path(cfg, opts, c);
    return std::move(c.out);
}

std::string format_csv(const ExperimentOutcome& out) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& r : out.rows) {
        const auto& p = r.params;
        os << r.task << ',' << r.relation << ',' << p.L << ',' << p.B << ',' << p.M << ','
           << format_double(p.delta) << ',' << format_double(p.t) << ',' << format_double(p.h)
           << ',' << p.sub_size() << ',' << format_double(r.lhs.mean) << ','
           << format_double(r.lhs.std_error) << ',' << format_double(r.rhs.mean) << ','
           << format_double(r.rhs.std_error) << ',' << format_double(r.residual) << ','
           << format_double(r.combined_error) << ',' << format_double(r.z_score) << ','
           << (r.pass ? "true" : "false") << ',' << r.n_samples << ',' << r.base_seed << '\n';
    }
    return os.str();
}

std::string format_report(const ExperimentConfig& cfg, const ExperimentOutcome& out) {
    std::ostringstream os;
    os << "rlelab " << RLELAB_VERSION << " task " << cfg.task << '\n';
    os << "plan n_samples=" << cfg.plan.n_samples << " base_seed=" << cfg.plan.base_seed
       << " crn_tag=" << cfg.plan.crn_tag << " threshold=" << brief(cfg.threshold) << '\n';
    for (const auto& l : out.report) os << l << '\n';
    std::size_t passed = 0;
    for (const auto& r : out.rows) passed += r.pass ? 1 : 0;
    os << "overall " << (out.all_pass ? "PASS" : "FAIL") << " (" << passed << " of "
       << out.rows.size() << " rows pass)\n";
    return os.str();
}

json make_manifest(const ExperimentConfig& cfg, const ExperimentOutcome& out,
                   const RunOptions& opts) {
    std::vector<std::string> digests;
    for (auto d : out.digests) digests.push_back(hex64(d));
    return {{"version", RLELAB_VERSION},
            {"config", config_to_json(cfg)},
            {"enumeration_budget", opts.budget},
            {"instance_digest", hex64(combine_hashes(out.digests))},
            {"report_digests", digests},
            {"all_pass", out.all_pass}};
}

}  // namespace rlelab
