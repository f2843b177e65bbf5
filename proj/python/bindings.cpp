#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "json.hpp"
#include "rlelab/error.hpp"
#include "rlelab/experiment.hpp"
#include "rlelab/interpolation.hpp"
#include "rlelab/posterior.hpp"
#include "rlelab/quenched.hpp"
#include "rlelab/relations.hpp"

namespace py = pybind11;
using namespace rlelab;

namespace {

RunOptions options(std::size_t workers) {
    RunOptions o;
    o.workers = workers;
    return o;
}

py::dict run_config(const std::string& config_json, const std::string& task,
                    std::size_t workers) {
    const auto cfg = parse_config(nlohmann::json::parse(config_json), task);
    const auto opts = options(workers ? workers : cfg.workers);
    const auto out = run_experiment(cfg, opts);
    py::dict d;
    d["all_pass"] = out.all_pass;
    d["csv"] = format_csv(out);
    d["report"] = format_report(cfg, out);
    d["manifest"] = make_manifest(cfg, out, opts).dump(2);
    return d;
}

}  // namespace

PYBIND11_MODULE(rlelab, m) {
    m.doc() = "Exact-enumeration laboratory for random linear estimation identities";
    m.attr("__version__") = RLELAB_VERSION;

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::class_<Prior>(m, "Prior")
        .def(py::init(&make_prior), py::arg("atoms"), py::arg("weights"))
        .def_property_readonly("num_atoms", &Prior::num_atoms)
        .def_property_readonly("section_dim", &Prior::section_dim)
        .def_property_readonly("s_max", &Prior::s_max)
        .def_property_readonly("weights", &Prior::weights)
        .def_property_readonly("section_variance", &Prior::section_variance)
        .def("mean", &Prior::mean);
    m.def("binary_prior", &binary_prior);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](std::size_t L, std::size_t B, std::size_t M, double delta, double t,
                         double h, double u, std::optional<std::size_t> sub_set_size) {
                 ModelParams p;
                 p.L = L;
                 p.B = B;
                 p.M = M;
                 p.delta = delta;
                 p.t = t;
                 p.h = h;
                 p.u = u;
                 p.sub_set_size = sub_set_size;
                 p.validate();
                 return p;
             }),
             py::arg("L") = 8, py::arg("B") = 1, py::arg("M") = 8, py::arg("delta") = 1.0,
             py::arg("t") = 0.0, py::arg("h") = 0.0, py::arg("u") = 0.5,
             py::arg("sub_set_size") = py::none())
        .def_readwrite("L", &ModelParams::L)
        .def_readwrite("B", &ModelParams::B)
        .def_readwrite("M", &ModelParams::M)
        .def_readwrite("delta", &ModelParams::delta)
        .def_readwrite("t", &ModelParams::t)
        .def_readwrite("h", &ModelParams::h)
        .def_readwrite("u", &ModelParams::u)
        .def_readwrite("sub_set_size", &ModelParams::sub_set_size)
        .def_property_readonly("N", &ModelParams::N)
        .def("sub_size", &ModelParams::sub_size);

    py::class_<SamplingPlan>(m, "SamplingPlan")
        .def(py::init([](std::size_t n, std::uint64_t seed, std::string tag) {
                 SamplingPlan p;
                 p.n_samples = n;
                 p.base_seed = seed;
                 p.crn_tag = std::move(tag);
                 return p;
             }),
             py::arg("n_samples") = 1000, py::arg("base_seed") = 1,
             py::arg("crn_tag") = "default")
        .def_readwrite("n_samples", &SamplingPlan::n_samples)
        .def_readwrite("base_seed", &SamplingPlan::base_seed)
        .def_readwrite("crn_tag", &SamplingPlan::crn_tag);

    py::class_<Instance>(m, "Instance")
        .def_readonly("L", &Instance::L)
        .def_readonly("B", &Instance::B)
        .def_readonly("M", &Instance::M)
        .def_readonly("sub", &Instance::sub)
        .def_readonly("phi", &Instance::phi)
        .def_readonly("s", &Instance::s)
        .def_readonly("z", &Instance::z)
        .def_readonly("zhat", &Instance::zhat)
        .def("digest", &Instance::digest);
    m.def(
        "sample_instance",
        [](const ModelParams& p, const Prior& prior, std::uint64_t seed, std::uint64_t tag,
           std::uint64_t index) { return sample_instance(p, prior, {seed, tag, index}); },
        py::arg("params"), py::arg("prior"), py::arg("base_seed"), py::arg("tag") = 0,
        py::arg("index") = 0);

    py::class_<PosteriorSummary>(m, "PosteriorSummary")
        .def_readonly("log_z", &PosteriorSummary::log_z)
        .def_readonly("mean", &PosteriorSummary::mean)
        .def_readonly("second_moment", &PosteriorSummary::second_moment)
        .def_readonly("marginals", &PosteriorSummary::marginals)
        .def_readonly("overlap_mean", &PosteriorSummary::overlap_mean)
        .def_readonly("overlap_sq", &PosteriorSummary::overlap_sq)
        .def_readonly("row_mean", &PosteriorSummary::row_mean)
        .def_readonly("row_sq", &PosteriorSummary::row_sq)
        .def_readonly("section_mmse_term", &PosteriorSummary::section_mmse_term)
        .def_readonly("configurations", &PosteriorSummary::configurations);
    m.def("enumerate_posterior",
          [](const Instance& inst, const ModelParams& p, const Prior& prior, std::uint64_t budget) {
              return enumerate_posterior(inst, p, prior, budget);
          },
          py::arg("instance"), py::arg("params"), py::arg("prior"),
          py::arg("budget") = kDefaultEnumerationBudget);

    py::class_<EstimateWithError>(m, "Estimate")
        .def_readonly("mean", &EstimateWithError::mean)
        .def_readonly("std_error", &EstimateWithError::std_error)
        .def_readonly("n_samples", &EstimateWithError::n_samples)
        .def("__repr__", [](const EstimateWithError& e) {
            return "Estimate(" + format_double(e.mean) + " +- " + format_double(e.std_error) + ")";
        });

    auto estimator = [&m](const char* name, auto fn) {
        m.def(
            name,
            [fn](const ModelParams& p, const Prior& prior, const SamplingPlan& plan,
                 std::size_t workers) { return fn(p, prior, plan, options(workers)); },
            py::arg("params"), py::arg("prior"), py::arg("plan"), py::arg("workers") = 0);
    };
    estimator("mutual_info", &mutual_info);
    estimator("mmse", &mmse);
    estimator("measurement_mmse", &measurement_mmse);
    estimator("sub_measurement_mmse", &sub_measurement_mmse);

    py::class_<RelationReport>(m, "RelationReport")
        .def_readonly("name", &RelationReport::name)
        .def_readonly("lhs", &RelationReport::lhs)
        .def_readonly("rhs", &RelationReport::rhs)
        .def_readonly("residual", &RelationReport::residual)
        .def_readonly("bias_bound", &RelationReport::bias_bound)
        .def_readonly("combined_error", &RelationReport::combined_error)
        .def_readonly("z_score", &RelationReport::z_score)
        .def_readonly("passed", &RelationReport::pass)
        .def_readonly("notes", &RelationReport::notes);

    py::class_<ScalingPoint>(m, "ScalingPoint")
        .def_readonly("L", &ScalingPoint::L)
        .def_readonly("lhs", &ScalingPoint::lhs)
        .def_readonly("rhs", &ScalingPoint::rhs)
        .def_readonly("residual", &ScalingPoint::residual);
    py::class_<ScalingReport>(m, "ScalingReport")
        .def_readonly("name", &ScalingReport::name)
        .def_readonly("L_grid", &ScalingReport::L_grid)
        .def_readonly("points", &ScalingReport::points)
        .def_readonly("slope", &ScalingReport::slope)
        .def_readonly("slope_lo", &ScalingReport::slope_lo)
        .def_readonly("slope_hi", &ScalingReport::slope_hi)
        .def_readonly("monotone", &ScalingReport::monotone)
        .def_readonly("passed", &ScalingReport::pass)
        .def_readonly("final_over_initial", &ScalingReport::final_over_initial)
        .def_readonly("notes", &ScalingReport::notes);

    py::class_<GridTemplate>(m, "GridTemplate")
        .def(py::init([](const ModelParams& p, double alpha) { return GridTemplate{p, alpha}; }),
             py::arg("params"), py::arg("alpha") = 1.0)
        .def("at", &GridTemplate::at);

    m.def("nishimori_suite",
          [](const ModelParams& p, const Prior& prior, const SamplingPlan& plan,
             std::size_t workers, double threshold) {
              return nishimori_suite(p, prior, plan, options(workers), threshold, p.t > 0.0);
          },
          py::arg("params"), py::arg("prior"), py::arg("plan"), py::arg("workers") = 0,
          py::arg("threshold") = kDefaultZThreshold);
    m.def("check_canonical_immse",
          [](const ModelParams& p, const Prior& prior, const SamplingPlan& plan, double fd_step,
             std::size_t workers, double threshold) {
              return check_canonical_immse(p, prior, plan, fd_step, options(workers), threshold);
          },
          py::arg("params"), py::arg("prior"), py::arg("plan"), py::arg("fd_step") = 0.02,
          py::arg("workers") = 0, py::arg("threshold") = kDefaultZThreshold);
    m.def("dt_derivative_reports",
          [](const ModelParams& p, const Prior& prior, const SamplingPlan& plan, double fd_step,
             std::size_t workers, double threshold) {
              return dt_derivative(p, prior, plan, fd_step, options(workers), threshold).reports;
          },
          py::arg("params"), py::arg("prior"), py::arg("plan"), py::arg("fd_step") = 0.05,
          py::arg("workers") = 0, py::arg("threshold") = kDefaultZThreshold);
    m.def("uniform_grid", &uniform_grid, py::arg("lo"), py::arg("hi"), py::arg("points"));
    m.def("path_reconstruction",
          [](const ModelParams& p, const Prior& prior, const SamplingPlan& plan,
             const std::vector<double>& t_grid, std::size_t workers, double threshold) {
              return integrate_path(p, prior, plan, t_grid, options(workers), threshold)
                  .quadrature_vs_direct;
          },
          py::arg("params"), py::arg("prior"), py::arg("plan"), py::arg("t_grid"),
          py::arg("workers") = 0, py::arg("threshold") = kDefaultZThreshold);
    m.def("check_snr_immse",
          [](const Prior& prior, const std::vector<std::size_t>& L_grid, const GridTemplate& tmpl,
             const SamplingPlan& plan, std::size_t workers) {
              return check_snr_immse(prior, L_grid, tmpl, plan, options(workers));
          },
          py::arg("prior"), py::arg("L_grid"), py::arg("template"), py::arg("plan"),
          py::arg("workers") = 0);
    m.def("check_lemma_mmse_relation",
          [](const Prior& prior, const GridTemplate& tmpl, const std::vector<std::size_t>& L_grid,
             const std::vector<double>& t_values, const SamplingPlan& plan, std::size_t workers) {
              return check_lemma_mmse_relation(prior, tmpl, L_grid, t_values, plan,
                                               options(workers));
          },
          py::arg("prior"), py::arg("template"), py::arg("L_grid"), py::arg("t_values"),
          py::arg("plan"), py::arg("workers") = 0);
    m.def("check_mmse_variation",
          [](const Prior& prior, const GridTemplate& tmpl, const std::vector<std::size_t>& L_grid,
             const SamplingPlan& plan, std::size_t workers) {
              return check_mmse_variation(prior, tmpl, L_grid, plan, options(workers));
          },
          py::arg("prior"), py::arg("template"), py::arg("L_grid"), py::arg("plan"),
          py::arg("workers") = 0);
    m.def("concentration_scan",
          [](const Prior& prior, const GridTemplate& tmpl, const std::vector<std::size_t>& L_grid,
             const SamplingPlan& plan, double h_lo, double h_hi, std::size_t points,
             std::size_t workers) {
              return concentration_scan(prior, tmpl, L_grid, HWindow{h_lo, h_hi, points}, plan,
                                        options(workers));
          },
          py::arg("prior"), py::arg("template"), py::arg("L_grid"), py::arg("plan"),
          py::arg("h_lo") = 0.05, py::arg("h_hi") = 0.5, py::arg("points") = 5,
          py::arg("workers") = 0);

    m.def("run_config", &run_config, py::arg("config_json"), py::arg("task") = "",
          py::arg("workers") = 0,
          "Run a JSON experiment configuration; returns csv, report, manifest and all_pass.");
}
