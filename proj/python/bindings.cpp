/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sida/assimilation.hpp"
#include "sida/ensemble.hpp"
#include "sida/grid.hpp"
#include "sida/harness.hpp"
#include "sida/metrics.hpp"
#include "sida/rng.hpp"
#include "sida/solver.hpp"
#include "sida/statistics.hpp"
#include "sida/weighting.hpp"

namespace py = pybind11;
using namespace sida;

namespace {

py::array_t<double> field_to_numpy(const Field2D& f) {
  // Shape (nx, ny) with the flatten-order storage exposed as Fortran strides.
  py::array_t<double> out({f.nx(), f.ny()},
                          {sizeof(double), sizeof(double) * f.nx()});
  std::copy(f.data(), f.data() + f.size(), out.mutable_data());
  return out;
}

Field2D field_from_numpy(const Grid2D& grid, py::array_t<double, py::array::forcecast> arr) {
  if (arr.ndim() != 2 || arr.shape(0) != grid.nx || arr.shape(1) != grid.ny) {
    throw std::invalid_argument("array shape must be (nx, ny)");
  }
  Field2D f(grid);
  auto view = arr.unchecked<2>();
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) f(i, j) = view(i, j);
  }
  f.ensure_finite("field_from_numpy");
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structurally informed ETKF data assimilation for 2D hyperbolic PDEs";

  py::class_<Grid2D>(m, "Grid2D")
      .def(py::init(&Grid2D::uniform), py::arg("x_min"), py::arg("x_max"), py::arg("y_min"),
           py::arg("y_max"), py::arg("nx"), py::arg("ny"))
      .def_readonly("x_min", &Grid2D::x_min)
      .def_readonly("x_max", &Grid2D::x_max)
      .def_readonly("y_min", &Grid2D::y_min)
      .def_readonly("y_max", &Grid2D::y_max)
      .def_readonly("nx", &Grid2D::nx)
      .def_readonly("ny", &Grid2D::ny)
      .def_readonly("dx", &Grid2D::dx)
      .def_readonly("dy", &Grid2D::dy)
      .def("size", &Grid2D::size)
      .def("x", &Grid2D::x)
      .def("y", &Grid2D::y)
      .def("__eq__", [](const Grid2D& a, const Grid2D& b) { return a == b; });

  py::class_<Field2D>(m, "Field2D")
      .def(py::init<const Grid2D&, double>(), py::arg("grid"), py::arg("fill") = 0.0)
      .def(py::init(&field_from_numpy), py::arg("grid"), py::arg("values"))
      .def_property_readonly("grid", &Field2D::grid)
      .def("to_numpy", &field_to_numpy, "Copy of the values with shape (nx, ny)")
      .def("__getitem__",
           [](const Field2D& f, std::pair<int, int> ij) {
             if (ij.first < 0 || ij.first >= f.nx() || ij.second < 0 || ij.second >= f.ny()) {
               throw py::index_error();
             }
             return f(ij.first, ij.second);
           })
      .def("size", &Field2D::size);

  py::enum_<Direction>(m, "Direction").value("X", Direction::X).value("Y", Direction::Y);

  // flatten/unflatten use the 1-based linear index of the serialized formats;
  // everything else in this module indexes 0-based storage offsets.
  m.def("flatten", &flatten, py::arg("i"), py::arg("j"), py::arg("grid"));
  m.def("unflatten", &unflatten, py::arg("m"), py::arg("grid"));
  m.def("flatten_field", [](const Field2D& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size()).eval();
  });
  m.def("unflatten_field", [](const Eigen::VectorXd& v, const Grid2D& g) {
    return unflatten_field(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), g);
  });
  m.def("central_diff", &central_diff, py::arg("field"), py::arg("direction"));

  py::class_<PdeModel> pde(m, "PdeModel");
  pde.def_static("linear_advection", &PdeModel::linear_advection, py::arg("ax"), py::arg("ay"))
      .def_static("burgers", &PdeModel::burgers)
      .def_readonly("ax", &PdeModel::ax)
      .def_readonly("ay", &PdeModel::ay);

  m.def("weno5_rhs", &weno5_rhs, py::arg("u"), py::arg("model"));
  m.def("tvdrk3_step", &tvdrk3_step, py::arg("u"), py::arg("dt"), py::arg("model"));
  m.def("advance", &advance, py::arg("u"), py::arg("n_steps"), py::arg("dt"), py::arg("model"),
        py::call_guard<py::gil_scoped_release>());
  m.def("initial_condition", &initial_condition, py::arg("name"), py::arg("grid"));
  m.def("initial_condition_value", &initial_condition_value, py::arg("name"), py::arg("x"),
        py::arg("y"));

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &RngStream::uniform)
      .def("normal", py::overload_cast<>(&RngStream::normal))
      .def("normal", py::overload_cast<double, double>(&RngStream::normal), py::arg("mean"),
           py::arg("stddev"));

  py::class_<Ensemble>(m, "Ensemble")
      .def(py::init([](std::vector<Field2D> members) {
             Ensemble e;
             e.members = std::move(members);
             return e;
           }),
           py::arg("members"))
      .def_readonly("members", &Ensemble::members)
      .def("size", &Ensemble::size)
      .def_property_readonly("grid", &Ensemble::grid);

  py::class_<CenteredEnsemble>(m, "CenteredEnsemble")
      .def_readonly("mean", &CenteredEnsemble::mean)
      .def_readonly("deviations", &CenteredEnsemble::deviations)
      .def("ensemble_size", &CenteredEnsemble::ensemble_size);

  m.def("init_ensemble", &init_ensemble, py::arg("u0"), py::arg("ensemble_size"),
        py::arg("noise_std"), py::arg("rng"));
  m.def("forecast", &forecast, py::arg("ensemble"), py::arg("n_steps"), py::arg("dt"),
        py::arg("model"), py::call_guard<py::gil_scoped_release>());
  m.def("ensemble_mean", &ensemble_mean, py::arg("ensemble"));
  m.def("center", &center, py::arg("ensemble"));
  m.def("inflate", &inflate, py::arg("centered"), py::arg("alpha"));

  py::class_<GradientStats>(m, "GradientStats")
      .def_readonly("s_x", &GradientStats::s_x)
      .def_readonly("s_y", &GradientStats::s_y)
      .def_readonly("s_diag", &GradientStats::s_diag)
      .def_readonly("theta", &GradientStats::theta)
      .def_readonly("phi", &GradientStats::phi);

  m.def("pointwise_variance", &pointwise_variance, py::arg("ensemble"));
  m.def("pearson_entry", &pearson_entry, py::arg("ensemble"), py::arg("m"), py::arg("m2"));
  m.def("gradient_stats", &gradient_stats, py::arg("ensemble"), py::arg("theta"), py::arg("phi"));
  m.def("correlation_matrix", &correlation_matrix, py::arg("ensemble"));
  m.def("structural_correlation", &structural_correlation, py::arg("r"), py::arg("prior_mean"),
        py::arg("d_thresh"));
  m.def("pearson_band", &pearson_band, py::arg("centered"), py::arg("offset"));

  py::class_<WeightingMatrix> wm(m, "WeightingMatrix");
  py::enum_<WeightingMatrix::Shape>(wm, "Shape")
      .value("Diagonal", WeightingMatrix::Shape::Diagonal)
      .value("FiveBanded", WeightingMatrix::Shape::FiveBanded);
  wm.def_static("diagonal", &WeightingMatrix::diagonal, py::arg("diag"))
      .def_static("five_banded", &WeightingMatrix::five_banded, py::arg("nx"), py::arg("diag"),
                  py::arg("band1"), py::arg("band_nx"))
      .def_property_readonly("shape", &WeightingMatrix::shape)
      .def("n", &WeightingMatrix::n)
      .def("nx", &WeightingMatrix::nx)
      .def_property_readonly("diag", &WeightingMatrix::diag)
      .def_property_readonly("band1", &WeightingMatrix::band1)
      .def_property_readonly("band_nx", &WeightingMatrix::band_nx)
      .def("entry", &WeightingMatrix::entry, py::arg("m"), py::arg("mp"))
      .def("to_dense", &WeightingMatrix::to_dense)
      .def("dump_banded_csv", [](const WeightingMatrix& w) {
        std::ostringstream out;
        w.dump_banded_csv(out);
        return out.str();
      });

  py::class_<LocalizationMatrix>(m, "LocalizationMatrix")
      .def_readonly("nx", &LocalizationMatrix::nx)
      .def_readonly("ny", &LocalizationMatrix::ny)
      .def_readonly("band1", &LocalizationMatrix::band1)
      .def_readonly("band_nx", &LocalizationMatrix::band_nx)
      .def("entry", &LocalizationMatrix::entry, py::arg("m"), py::arg("mp"));

  py::class_<RefinementMask>(m, "RefinementMask")
      .def_readonly("nx", &RefinementMask::nx)
      .def_readonly("ny", &RefinementMask::ny)
      .def_readonly("band1", &RefinementMask::band1)
      .def_readonly("band_nx", &RefinementMask::band_nx)
      .def("entry", &RefinementMask::entry, py::arg("m"), py::arg("mp"));

  m.def("build_localization", &build_localization, py::arg("grid"));
  m.def("directional_derivative_fields", &directional_derivative_fields, py::arg("prior_mean"));
  m.def("build_mask", &build_mask, py::arg("prior_mean"), py::arg("d_thresh"));
  m.def("assemble_W_C_diag", &assemble_W_C_diag, py::arg("ensemble"), py::arg("alpha"));
  m.def("assemble_W_C_banded", &assemble_W_C_banded, py::arg("ensemble"), py::arg("alpha"),
        py::arg("localization"));
  m.def("assemble_W_S_diag", &assemble_W_S_diag, py::arg("ensemble"), py::arg("theta"),
        py::arg("phi"), py::arg("beta_tilde"));
  m.def(
      "assemble_W_S_banded",
      [](const Ensemble& ens, double theta, double phi, double beta_tilde,
         const LocalizationMatrix& loc, const RefinementMask* mask) {
        return assemble_W_S_banded(ens, theta, phi, beta_tilde, loc, mask);
      },
      py::arg("ensemble"), py::arg("theta"), py::arg("phi"), py::arg("beta_tilde"),
      py::arg("localization"), py::arg("mask") = nullptr);

  py::class_<ObservationModel> om(m, "ObservationModel");
  py::enum_<ObservationModel::Pattern>(om, "Pattern")
      .value("Dense", ObservationModel::Pattern::Dense)
      .value("Checkerboard", ObservationModel::Pattern::Checkerboard);
  om.def_static("dense", &ObservationModel::dense, py::arg("grid"), py::arg("gamma"))
      .def_static("checkerboard", &ObservationModel::checkerboard, py::arg("grid"),
                  py::arg("gamma"))
      .def_readonly("pattern", &ObservationModel::pattern)
      .def_readonly("gamma", &ObservationModel::gamma)
      .def_readonly("selection", &ObservationModel::selection)
      .def("m_obs", &ObservationModel::m_obs)
      .def("select", &ObservationModel::select, py::arg("full"))
      .def("select_field", &ObservationModel::select_field, py::arg("field"));

  py::class_<AnalysisDiagnostics>(m, "AnalysisDiagnostics")
      .def_readonly("diagonal_fallback", &AnalysisDiagnostics::diagonal_fallback)
      .def_readonly("innovation_condition", &AnalysisDiagnostics::innovation_condition)
      .def_readonly("notes", &AnalysisDiagnostics::notes);

  py::class_<AnalysisResult>(m, "AnalysisResult")
      .def_readonly("posterior_mean", &AnalysisResult::posterior_mean)
      .def_readonly("posterior_ensemble", &AnalysisResult::posterior_ensemble)
      .def_readonly("diagnostics", &AnalysisResult::diagnostics);

  py::class_<WeightingConfig> wc(m, "WeightingConfig");
  py::enum_<WeightingConfig::Kind>(wc, "Kind")
      .value("CovDiag", WeightingConfig::Kind::CovDiag)
      .value("CovBanded", WeightingConfig::Kind::CovBanded)
      .value("GradDiag", WeightingConfig::Kind::GradDiag)
      .value("GradBanded", WeightingConfig::Kind::GradBanded);
  wc.def(py::init<>())
      .def_readwrite("kind", &WeightingConfig::kind)
      .def_readwrite("alpha", &WeightingConfig::alpha)
      .def_readwrite("theta", &WeightingConfig::theta)
      .def_readwrite("phi", &WeightingConfig::phi)
      .def_readwrite("beta_tilde", &WeightingConfig::beta_tilde)
      .def_readwrite("use_mask", &WeightingConfig::use_mask)
      .def_readwrite("d_thresh", &WeightingConfig::d_thresh)
      .def_readwrite("inflate_ensemble", &WeightingConfig::inflate_ensemble);

  m.def("observe_truth", &observe_truth, py::arg("truth"), py::arg("observation"), py::arg("rng"));
  m.def(
      "posterior_mean",
      [](const Field2D& prior, const Eigen::VectorXd& y, const ObservationModel& obs,
         const WeightingMatrix& w) {
        AnalysisDiagnostics diag;
        Field2D mean = posterior_mean(prior, y, obs, w, &diag);
        return py::make_tuple(mean, diag);
      },
      py::arg("prior_mean"), py::arg("y"), py::arg("observation"), py::arg("weighting"));
  m.def("transform_operator", &transform_operator, py::arg("centered"), py::arg("observation"));
  m.def("posterior_ensemble", &posterior_ensemble, py::arg("centered"), py::arg("posterior_mean"),
        py::arg("transform"));
  m.def("analysis_step", &analysis_step, py::arg("ensemble"), py::arg("y"), py::arg("observation"),
        py::arg("scheme"), py::call_guard<py::gil_scoped_release>());

  py::class_<RelativeErrors>(m, "RelativeErrors")
      .def_readonly("l1", &RelativeErrors::l1)
      .def_readonly("l2", &RelativeErrors::l2);

  py::class_<MetricSeries>(m, "MetricSeries")
      .def(py::init<>())
      .def("append", &MetricSeries::append, py::arg("t"), py::arg("err_l1"), py::arg("err_l2"),
           py::arg("pcorr"))
      .def_readonly("times", &MetricSeries::times)
      .def_readonly("err_l1", &MetricSeries::err_l1)
      .def_readonly("err_l2", &MetricSeries::err_l2)
      .def_readonly("pcorr", &MetricSeries::pcorr)
      .def("size", &MetricSeries::size);

  py::class_<SummaryMetrics>(m, "SummaryMetrics")
      .def_readonly("e_l1", &SummaryMetrics::e_l1)
      .def_readonly("e_l2", &SummaryMetrics::e_l2)
      .def_readonly("pc", &SummaryMetrics::pc)
      .def_readonly("q0", &SummaryMetrics::q0);

  m.def("pointwise_error", &pointwise_error, py::arg("u"), py::arg("truth"));
  m.def("relative_errors", &relative_errors, py::arg("u"), py::arg("truth"));
  m.def("pattern_correlation", &pattern_correlation, py::arg("u"), py::arg("truth"));
  m.def("summarize", &summarize, py::arg("series"));

  py::class_<RunSnapshot>(m, "RunSnapshot")
      .def_readonly("t", &RunSnapshot::t)
      .def_readonly("posterior_mean", &RunSnapshot::posterior_mean)
      .def_readonly("truth", &RunSnapshot::truth)
      .def_readonly("variance", &RunSnapshot::variance)
      .def_readonly("s_x", &RunSnapshot::s_x)
      .def_readonly("s_y", &RunSnapshot::s_y)
      .def_readonly("s_diag", &RunSnapshot::s_diag);

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("config_hash", &RunRecord::config_hash)
      .def_readonly("series", &RunRecord::series)
      .def_readonly("summary", &RunRecord::summary)
      .def_readonly("snapshots", &RunRecord::snapshots)
      .def_readonly("diagnostics", &RunRecord::diagnostics)
      .def_readonly("fallback_count", &RunRecord::fallback_count);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_static("from_file", &ScenarioConfig::from_file, py::arg("path"))
      .def_static("from_text",
                  [](const std::string& text) {
                    std::istringstream in(text);
                    return ScenarioConfig::parse(in);
                  })
      .def("to_text", &ScenarioConfig::to_text)
      .def("n_cycles", &ScenarioConfig::n_cycles)
      .def_property_readonly("grid", [](const ScenarioConfig& c) { return c.grid; })
      .def("observation_model", &ScenarioConfig::observation_model);

  m.def("generate_truth", py::overload_cast<const ScenarioConfig&>(&generate_truth),
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("run_scenario", py::overload_cast<const ScenarioConfig&>(&run_scenario),
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("write_run_dir", &write_run_dir, py::arg("config"), py::arg("record"),
        py::arg("out_dir"));
  m.def("format_summary", &format_summary, py::arg("summary"));
}
