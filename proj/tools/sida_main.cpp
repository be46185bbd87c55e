/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "sida/format.hpp"
#include "sida/harness.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  const sida::ScenarioConfig cfg = sida::ScenarioConfig::from_file(config_path);
  const sida::RunRecord record = sida::run_scenario(cfg);
  sida::write_run_dir(cfg, record, out_dir);
  std::cout << sida::format_summary(record.summary) << '\n';
  return 0;
}

int cmd_truth_gen(const std::string& config_path, const std::string& out_dir) {
  const sida::ScenarioConfig cfg = sida::ScenarioConfig::from_file(config_path);
  const std::vector<sida::Field2D> truth = sida::generate_truth(cfg);

  const fs::path root(out_dir);
  fs::create_directories(root / "snapshots");
  {
    std::ofstream out(root / "config.snapshot", std::ios::binary);
    out << cfg.to_text();
  }
  std::ofstream times(root / "times.csv", std::ios::binary);
  times << "q,t\n";
  for (std::size_t q = 0; q < truth.size(); ++q) {
    const double t = static_cast<double>(q + 1) * cfg.obs_dt();
    char label[32];
    std::snprintf(label, sizeof(label), "%.6f", t);
    std::ofstream out(root / "snapshots" / (std::string(label) + ".field"), std::ios::binary);
    sida::write_field_binary(truth[q], out);
    times << (q + 1) << ',' << sida::format_double(t) << '\n';
  }
  std::cout << "wrote " << truth.size() << " truth fields to " << out_dir << '\n';
  return 0;
}

int cmd_metrics(const std::string& run_dir) {
  const sida::RunRecord record = sida::load_run_dir(run_dir);
  if (record.series.size() == 0) {
    throw std::runtime_error("metrics: run has an empty metric series");
  }
  std::cout << sida::format_summary(record.summary) << '\n';
  return 0;
}

int cmd_plot_data(const std::string& run_dir, const std::string& what,
                  const std::string& out_file) {
  const sida::PlotRequest request = sida::PlotRequest::parse(what);
  const sida::RunRecord record = sida::load_run_dir(run_dir);
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("plot-data: cannot write '" + out_file + "'");
  sida::emit_plot_data(record, request, out);
  std::cout << "wrote " << out_file << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structurally informed ensemble transform Kalman filtering for 2D hyperbolic PDEs"};
  app.require_subcommand(1);

  std::string config_path, run_dir, out_path, what;

  CLI::App* run = app.add_subcommand("run", "Run a scenario and write a run directory");
  run->add_option("config", config_path, "Scenario config file")->required();
  run->add_option("--out", out_path, "Output run directory")->required();

  CLI::App* truth = app.add_subcommand("truth-gen", "Generate truth fields at assimilation times");
  truth->add_option("config", config_path, "Scenario config file")->required();
  truth->add_option("--out", out_path, "Output directory")->required();

  CLI::App* metrics = app.add_subcommand("metrics", "Print summary metrics of a run directory");
  metrics->add_option("run_dir", run_dir, "Run directory")->required();

  CLI::App* plot = app.add_subcommand("plot-data", "Emit plot-ready CSV from a run directory");
  plot->add_option("run_dir", run_dir, "Run directory")->required();
  plot->add_option("--what", what,
                   "metrics | cross_section(y,t) | stats_field(kind,t)")->required();
  plot->add_option("--out", out_path, "Output CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_path);
    if (truth->parsed()) return cmd_truth_gen(config_path, out_path);
    if (metrics->parsed()) return cmd_metrics(run_dir);
    if (plot->parsed()) return cmd_plot_data(run_dir, what, out_path);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
