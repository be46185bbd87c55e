/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sida/assimilation.hpp"
#include "sida/grid.hpp"
#include "sida/metrics.hpp"
#include "sida/solver.hpp"

namespace sida {

/// Everything needed to rerun an experiment bit-for-bit. Parsed from a flat
/// key=value text format with dotted section names; unknown keys are errors.
struct ScenarioConfig {
  int schema_version = 1;

  PdeModel pde;
  std::string init_name;  // advection_box | burgers_box
  Grid2D grid;

  double dt = 0.0;
  double t_final = 0.0;
  int obs_interval = 1;  // steps between assimilations

  int ensemble_size = 0;
  double init_noise_std = 0.0;
  std::uint64_t ensemble_seed = 0;

  ObservationModel::Pattern obs_pattern = ObservationModel::Pattern::Dense;
  double gamma = 0.0;
  std::uint64_t obs_seed = 0;

  WeightingConfig weighting;

  enum class TruthSource { Analytic, ReferenceRun };
  TruthSource truth_source = TruthSource::Analytic;
  int truth_refine = 1;

  std::vector<double> snapshot_times;

  /// Number of assimilation cycles t_final / (obs_interval * dt); throws when
  /// the division is not an integer.
  int n_cycles() const;
  double obs_dt() const { return obs_interval * dt; }

  ObservationModel observation_model() const;

  static ScenarioConfig parse(std::istream& in);
  static ScenarioConfig from_file(const std::string& path);
  /// Canonical text form; parse(to_text()) reproduces the config exactly.
  std::string to_text() const;
  void validate() const;
};

/// One recorded snapshot: the analysis state and the prior-ensemble statistics
/// fields at an assimilation time.
struct RunSnapshot {
  double t = 0.0;
  Field2D posterior_mean;
  Field2D truth;
  Field2D variance;
  Field2D s_x;
  Field2D s_y;
  Field2D s_diag;
};

struct RunRecord {
  std::uint64_t config_hash = 0;
  MetricSeries series;
  SummaryMetrics summary;
  std::vector<RunSnapshot> snapshots;
  std::vector<std::string> diagnostics;
  int fallback_count = 0;
};

/// Truth fields at the assimilation times t_q, q = 1..L_obs. Analytic
/// evaluates the advected initial profile exactly; ReferenceRun integrates on
/// a grid refined by the configured integer factor with dt reduced by the same
/// factor and subsamples to the scenario grid.
std::vector<Field2D> generate_truth(const ScenarioConfig& cfg);

RunRecord run_scenario(const ScenarioConfig& cfg);
/// Variant reusing a precomputed truth sequence (must match generate_truth).
RunRecord run_scenario(const ScenarioConfig& cfg, const std::vector<Field2D>& truth);

/// Writes config.snapshot, metrics.csv, summary.txt, diagnostics.log and
/// snapshots/<t>[.kind].field under out_dir.
void write_run_dir(const ScenarioConfig& cfg, const RunRecord& record,
                   const std::string& out_dir);

/// Reads a directory produced by write_run_dir (metrics + any snapshots).
RunRecord load_run_dir(const std::string& run_dir, ScenarioConfig* cfg_out = nullptr);

/// Plot-data request: "metrics", "cross_section(y,t)" or
/// "stats_field(kind,t)" with kind in {variance, s_x, s_y, s_diag}.
struct PlotRequest {
  enum class What { Metrics, CrossSection, StatsField };
  What what = What::Metrics;
  double y_value = 0.0;
  double t = 0.0;
  std::string kind;

  static PlotRequest parse(const std::string& text);
};

void emit_plot_data(const RunRecord& record, const PlotRequest& request, std::ostream& out);

std::string format_summary(const SummaryMetrics& s);

}  // namespace sida
