/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sida/format.hpp"
#include "sida/statistics.hpp"

namespace fs = std::filesystem;

namespace sida {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Strict key=value reader: duplicate keys, unknown keys and malformed lines
/// are all errors.
class KvReader {
 public:
  explicit KvReader(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key = value");
      }
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) {
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
      }
      if (!entries_.emplace(key, value).second) {
        throw std::invalid_argument("config: duplicate key '" + key + "'");
      }
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string require(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw std::invalid_argument("config: missing required key '" + key + "'");
    }
    consumed_.insert(key);
    return it->second;
  }

  std::string optional(const std::string& key, const std::string& fallback) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }

  void forbid(const std::string& key, const std::string& why) const {
    if (entries_.count(key)) {
      throw std::invalid_argument("config: key '" + key + "' not applicable (" + why + ")");
    }
  }

  void finish() const {
    for (const auto& [key, value] : entries_) {
      if (!consumed_.count(key)) {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    }
  }

 private:
  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
};

int parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing chars");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing chars");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an unsigned integer, got '" +
                                s + "'");
  }
}

double parse_dbl(const std::string& s, const std::string& key) {
  try {
    return parse_double(s);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + s + "'");
  }
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + s + "'");
}

std::string format_time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

bool times_match(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

int ScenarioConfig::n_cycles() const {
  if (!(dt > 0.0)) throw std::invalid_argument("config: time.dt must be positive");
  const double steps_real = t_final / dt;
  const long long steps = std::llround(steps_real);
  if (steps < 0 || std::abs(steps_real - static_cast<double>(steps)) >
                       1e-9 * std::max(1.0, std::abs(steps_real))) {
    throw std::invalid_argument("config: t_final/dt is not an integer");
  }
  if (steps % obs_interval != 0) {
    throw std::invalid_argument("config: step count not divisible by obs_interval");
  }
  return static_cast<int>(steps / obs_interval);
}

ObservationModel ScenarioConfig::observation_model() const {
  return obs_pattern == ObservationModel::Pattern::Dense
             ? ObservationModel::dense(grid, gamma)
             : ObservationModel::checkerboard(grid, gamma);
}

void ScenarioConfig::validate() const {
  if (schema_version != 1) throw std::invalid_argument("config: unsupported schema_version");
  if (obs_interval < 1) throw std::invalid_argument("config: obs_interval must be >= 1");
  if (ensemble_size < 2) throw std::invalid_argument("config: ensemble.size must be >= 2");
  if (init_noise_std < 0.0) throw std::invalid_argument("config: noise std must be >= 0");
  if (gamma < 0.0) throw std::invalid_argument("config: observation.gamma must be >= 0");
  if (t_final < 0.0) throw std::invalid_argument("config: t_final must be >= 0");
  if (truth_source == TruthSource::ReferenceRun && truth_refine < 1) {
    throw std::invalid_argument("config: truth.refine must be >= 1");
  }
  if (truth_source == TruthSource::Analytic &&
      pde.kind != PdeModel::Kind::LinearAdvection) {
    throw std::invalid_argument("config: analytic truth requires linear_advection");
  }
  const int cycles = n_cycles();
  for (double t_req : snapshot_times) {
    bool found = false;
    for (int q = 1; q <= cycles && !found; ++q) found = times_match(q * obs_dt(), t_req);
    if (!found) {
      throw std::invalid_argument("config: snapshot time " + format_double(t_req) +
                                  " is not an assimilation time");
    }
  }
  if (weighting.covariance_based() && weighting.alpha < 1.0) {
    throw std::invalid_argument("config: weighting.alpha must be >= 1");
  }
}

ScenarioConfig ScenarioConfig::parse(std::istream& in) {
  KvReader kv(in);
  ScenarioConfig cfg;
  cfg.schema_version = parse_int(kv.require("schema_version"), "schema_version");

  const std::string pde_kind = kv.require("pde.kind");
  if (pde_kind == "linear_advection") {
    cfg.pde = PdeModel::linear_advection(parse_dbl(kv.require("pde.a_x"), "pde.a_x"),
                                         parse_dbl(kv.require("pde.a_y"), "pde.a_y"));
  } else if (pde_kind == "burgers") {
    kv.forbid("pde.a_x", "burgers has fixed fluxes");
    kv.forbid("pde.a_y", "burgers has fixed fluxes");
    cfg.pde = PdeModel::burgers();
  } else {
    throw std::invalid_argument("config: pde.kind must be linear_advection or burgers");
  }

  cfg.init_name = kv.require("init.name");
  cfg.grid = Grid2D::uniform(parse_dbl(kv.require("grid.x_min"), "grid.x_min"),
                             parse_dbl(kv.require("grid.x_max"), "grid.x_max"),
                             parse_dbl(kv.require("grid.y_min"), "grid.y_min"),
                             parse_dbl(kv.require("grid.y_max"), "grid.y_max"),
                             parse_int(kv.require("grid.n_x"), "grid.n_x"),
                             parse_int(kv.require("grid.n_y"), "grid.n_y"));

  cfg.dt = parse_dbl(kv.require("time.dt"), "time.dt");
  cfg.t_final = parse_dbl(kv.require("time.t_final"), "time.t_final");
  cfg.obs_interval = parse_int(kv.require("time.obs_interval"), "time.obs_interval");

  cfg.ensemble_size = parse_int(kv.require("ensemble.size"), "ensemble.size");
  cfg.init_noise_std = parse_dbl(kv.require("ensemble.init_noise_std"), "ensemble.init_noise_std");
  cfg.ensemble_seed = parse_u64(kv.require("ensemble.seed"), "ensemble.seed");

  const std::string pattern = kv.require("observation.pattern");
  if (pattern == "dense") {
    cfg.obs_pattern = ObservationModel::Pattern::Dense;
  } else if (pattern == "checkerboard") {
    cfg.obs_pattern = ObservationModel::Pattern::Checkerboard;
  } else {
    throw std::invalid_argument("config: observation.pattern must be dense or checkerboard");
  }
  cfg.gamma = parse_dbl(kv.require("observation.gamma"), "observation.gamma");
  cfg.obs_seed = parse_u64(kv.require("observation.seed"), "observation.seed");

  const std::string scheme = kv.require("weighting.scheme");
  WeightingConfig& w = cfg.weighting;
  if (scheme == "cov_diag" || scheme == "cov_banded") {
    w.kind = scheme == "cov_diag" ? WeightingConfig::Kind::CovDiag
                                  : WeightingConfig::Kind::CovBanded;
    w.alpha = parse_dbl(kv.require("weighting.alpha"), "weighting.alpha");
    kv.forbid("weighting.theta", "covariance scheme");
    kv.forbid("weighting.phi", "covariance scheme");
    kv.forbid("weighting.beta_tilde", "covariance scheme");
    kv.forbid("weighting.mask", "covariance scheme");
    kv.forbid("weighting.d_thresh", "covariance scheme");
  } else if (scheme == "grad_diag" || scheme == "grad_banded") {
    w.kind = scheme == "grad_diag" ? WeightingConfig::Kind::GradDiag
                                   : WeightingConfig::Kind::GradBanded;
    w.theta = parse_dbl(kv.require("weighting.theta"), "weighting.theta");
    w.phi = parse_dbl(kv.require("weighting.phi"), "weighting.phi");
    w.beta_tilde = parse_dbl(kv.require("weighting.beta_tilde"), "weighting.beta_tilde");
    // alpha only drives the optional ensemble-inflation override here.
    w.alpha = parse_dbl(kv.optional("weighting.alpha", "1"), "weighting.alpha");
    if (scheme == "grad_banded") {
      w.use_mask = parse_bool(kv.optional("weighting.mask", "false"), "weighting.mask");
      if (w.use_mask) {
        w.d_thresh = parse_dbl(kv.require("weighting.d_thresh"), "weighting.d_thresh");
      } else {
        kv.forbid("weighting.d_thresh", "mask disabled");
      }
    } else {
      kv.forbid("weighting.mask", "diagonal scheme");
      kv.forbid("weighting.d_thresh", "diagonal scheme");
    }
  } else {
    throw std::invalid_argument(
        "config: weighting.scheme must be cov_diag, cov_banded, grad_diag or grad_banded");
  }
  if (kv.has("weighting.inflate_ensemble")) {
    w.inflate_ensemble =
        parse_bool(kv.require("weighting.inflate_ensemble"), "weighting.inflate_ensemble");
  }

  const std::string source = kv.require("truth.source");
  if (source == "analytic") {
    cfg.truth_source = TruthSource::Analytic;
    kv.forbid("truth.refine", "analytic truth");
  } else if (source == "reference_run") {
    cfg.truth_source = TruthSource::ReferenceRun;
    cfg.truth_refine = parse_int(kv.require("truth.refine"), "truth.refine");
  } else {
    throw std::invalid_argument("config: truth.source must be analytic or reference_run");
  }

  const std::string snap = kv.optional("snapshots.times", "");
  if (!snap.empty()) {
    std::istringstream list(snap);
    std::string item;
    while (std::getline(list, item, ',')) {
      cfg.snapshot_times.push_back(parse_dbl(trim(item), "snapshots.times"));
    }
  }

  kv.finish();
  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  return parse(in);
}

std::string ScenarioConfig::to_text() const {
  std::ostringstream out;
  out << "schema_version = " << schema_version << '\n';
  if (pde.kind == PdeModel::Kind::LinearAdvection) {
    out << "pde.kind = linear_advection\n";
    out << "pde.a_x = " << format_double(pde.ax) << '\n';
    out << "pde.a_y = " << format_double(pde.ay) << '\n';
  } else {
    out << "pde.kind = burgers\n";
  }
  out << "init.name = " << init_name << '\n';
  out << "grid.x_min = " << format_double(grid.x_min) << '\n';
  out << "grid.x_max = " << format_double(grid.x_max) << '\n';
  out << "grid.y_min = " << format_double(grid.y_min) << '\n';
  out << "grid.y_max = " << format_double(grid.y_max) << '\n';
  out << "grid.n_x = " << grid.nx << '\n';
  out << "grid.n_y = " << grid.ny << '\n';
  out << "time.dt = " << format_double(dt) << '\n';
  out << "time.t_final = " << format_double(t_final) << '\n';
  out << "time.obs_interval = " << obs_interval << '\n';
  out << "ensemble.size = " << ensemble_size << '\n';
  out << "ensemble.init_noise_std = " << format_double(init_noise_std) << '\n';
  out << "ensemble.seed = " << ensemble_seed << '\n';
  out << "observation.pattern = "
      << (obs_pattern == ObservationModel::Pattern::Dense ? "dense" : "checkerboard") << '\n';
  out << "observation.gamma = " << format_double(gamma) << '\n';
  out << "observation.seed = " << obs_seed << '\n';
  switch (weighting.kind) {
    case WeightingConfig::Kind::CovDiag:
      out << "weighting.scheme = cov_diag\n";
      out << "weighting.alpha = " << format_double(weighting.alpha) << '\n';
      break;
    case WeightingConfig::Kind::CovBanded:
      out << "weighting.scheme = cov_banded\n";
      out << "weighting.alpha = " << format_double(weighting.alpha) << '\n';
      break;
    case WeightingConfig::Kind::GradDiag:
    case WeightingConfig::Kind::GradBanded:
      out << "weighting.scheme = "
          << (weighting.kind == WeightingConfig::Kind::GradDiag ? "grad_diag" : "grad_banded")
          << '\n';
      out << "weighting.theta = " << format_double(weighting.theta) << '\n';
      out << "weighting.phi = " << format_double(weighting.phi) << '\n';
      out << "weighting.beta_tilde = " << format_double(weighting.beta_tilde) << '\n';
      if (weighting.alpha != 1.0) {
        out << "weighting.alpha = " << format_double(weighting.alpha) << '\n';
      }
      if (weighting.kind == WeightingConfig::Kind::GradBanded) {
        out << "weighting.mask = " << (weighting.use_mask ? "true" : "false") << '\n';
        if (weighting.use_mask) {
          out << "weighting.d_thresh = " << format_double(weighting.d_thresh) << '\n';
        }
      }
      break;
  }
  if (weighting.inflate_ensemble.has_value()) {
    out << "weighting.inflate_ensemble = " << (*weighting.inflate_ensemble ? "true" : "false")
        << '\n';
  }
  if (truth_source == TruthSource::Analytic) {
    out << "truth.source = analytic\n";
  } else {
    out << "truth.source = reference_run\n";
    out << "truth.refine = " << truth_refine << '\n';
  }
  if (!snapshot_times.empty()) {
    out << "snapshots.times = ";
    for (std::size_t s = 0; s < snapshot_times.size(); ++s) {
      if (s) out << ',';
      out << format_double(snapshot_times[s]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Field2D> generate_truth(const ScenarioConfig& cfg) {
  cfg.validate();
  const int cycles = cfg.n_cycles();
  std::vector<Field2D> truth;
  truth.reserve(cycles);

  if (cfg.truth_source == ScenarioConfig::TruthSource::Analytic) {
    const double span_x = cfg.grid.x_max - cfg.grid.x_min;
    const double span_y = cfg.grid.y_max - cfg.grid.y_min;
    auto wrap = [](double v, double lo, double span) {
      double r = std::fmod(v - lo, span);
      if (r < 0.0) r += span;
      return lo + r;
    };
    for (int q = 1; q <= cycles; ++q) {
      const double t = q * cfg.obs_dt();
      Field2D f(cfg.grid);
      for (int j = 0; j < cfg.grid.ny; ++j) {
        for (int i = 0; i < cfg.grid.nx; ++i) {
          const double x = wrap(cfg.grid.x(i) - cfg.pde.ax * t, cfg.grid.x_min, span_x);
          const double y = wrap(cfg.grid.y(j) - cfg.pde.ay * t, cfg.grid.y_min, span_y);
          f(i, j) = initial_condition_value(cfg.init_name, x, y);
        }
      }
      truth.push_back(std::move(f));
    }
    return truth;
  }

  // Reference run on the refined grid with proportionally reduced dt,
  // subsampled back by exact index striding.
  const int factor = cfg.truth_refine;
  const Grid2D fine = Grid2D::uniform(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.y_min,
                                      cfg.grid.y_max, (cfg.grid.nx - 1) * factor + 1,
                                      (cfg.grid.ny - 1) * factor + 1);
  const double dt_fine = cfg.dt / factor;
  const int steps_per_cycle = cfg.obs_interval * factor;
  Field2D state = initial_condition(cfg.init_name, fine);
  for (int q = 1; q <= cycles; ++q) {
    state = advance(state, steps_per_cycle, dt_fine, cfg.pde);
    Field2D coarse(cfg.grid);
    for (int j = 0; j < cfg.grid.ny; ++j) {
      for (int i = 0; i < cfg.grid.nx; ++i) {
        coarse(i, j) = state(i * factor, j * factor);
      }
    }
    truth.push_back(std::move(coarse));
  }
  return truth;
}

RunRecord run_scenario(const ScenarioConfig& cfg) {
  return run_scenario(cfg, generate_truth(cfg));
}

RunRecord run_scenario(const ScenarioConfig& cfg, const std::vector<Field2D>& truth) {
  cfg.validate();
  const int cycles = cfg.n_cycles();
  if (static_cast<int>(truth.size()) != cycles) {
    throw std::invalid_argument("run_scenario: truth sequence length != cycle count");
  }
  const ObservationModel obs = cfg.observation_model();

  RngStream ens_rng(cfg.ensemble_seed);
  RngStream obs_rng(cfg.obs_seed);

  RunRecord record;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(cfg.to_text()));
    record.config_hash = fnv1a64(cfg.to_text());
    record.diagnostics.push_back(std::string("config_hash=") + buf);
  }

  const Field2D u0 = initial_condition(cfg.init_name, cfg.grid);
  Ensemble ens = init_ensemble(u0, cfg.ensemble_size, cfg.init_noise_std, ens_rng);

  for (int q = 1; q <= cycles; ++q) {
    const double t = q * cfg.obs_dt();
    try {
      ens = forecast(ens, cfg.obs_interval, cfg.dt, cfg.pde);
      const Eigen::VectorXd y = observe_truth(truth[q - 1], obs, obs_rng);
      AnalysisResult res = analysis_step(ens, y, obs, cfg.weighting);

      if (res.diagnostics.diagonal_fallback) {
        ++record.fallback_count;
        record.diagnostics.push_back("cycle " + std::to_string(q) + " t=" + format_double(t) +
                                     ": diagonal fallback (innovation factorization failed)");
      }

      const RelativeErrors rel = relative_errors(res.posterior_mean, truth[q - 1]);
      const auto pc = pattern_correlation(res.posterior_mean, truth[q - 1]);
      if (!pc.has_value()) {
        record.diagnostics.push_back("cycle " + std::to_string(q) + " t=" + format_double(t) +
                                     ": pattern correlation undefined (excluded from Pc)");
      }
      record.series.append(t, rel.l1, rel.l2,
                           pc.value_or(std::numeric_limits<double>::quiet_NaN()));

      const bool want_snapshot =
          std::any_of(cfg.snapshot_times.begin(), cfg.snapshot_times.end(),
                      [t](double req) { return times_match(t, req); });
      if (want_snapshot) {
        const bool grad_scheme = !cfg.weighting.covariance_based();
        const GradientStats stats = gradient_stats(ens, grad_scheme ? cfg.weighting.theta : 1.0,
                                                   grad_scheme ? cfg.weighting.phi : 1.0);
        RunSnapshot snap;
        snap.t = t;
        snap.posterior_mean = res.posterior_mean;
        snap.truth = truth[q - 1];
        snap.variance = pointwise_variance(ens);
        snap.s_x = stats.s_x;
        snap.s_y = stats.s_y;
        snap.s_diag = stats.s_diag;
        record.snapshots.push_back(std::move(snap));
      }

      ens = std::move(res.posterior_ensemble);
    } catch (const std::exception& err) {
      throw std::runtime_error("run_scenario: cycle " + std::to_string(q) + " (t=" +
                               format_double(t) + ") failed: " + err.what());
    }
  }

  if (record.series.size() > 0) {
    record.summary = summarize(record.series);
  } else {
    record.summary.e_l1 = record.summary.e_l2 = record.summary.pc =
        std::numeric_limits<double>::quiet_NaN();
    record.summary.q0 = 0;
  }
  return record;
}

std::string format_summary(const SummaryMetrics& s) {
  return "e_l1=" + format_double(s.e_l1) + ", e_l2=" + format_double(s.e_l2) +
         ", Pc=" + format_double(s.pc);
}

namespace {

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

void write_snapshot_field(const fs::path& dir, const std::string& label,
                          const std::string& kind, const Field2D& f) {
  const std::string name = kind.empty() ? label + ".field" : label + "." + kind + ".field";
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot '" + name + "'");
  write_field_binary(f, out);
}

}  // namespace

void write_run_dir(const ScenarioConfig& cfg, const RunRecord& record,
                   const std::string& out_dir) {
  const fs::path root(out_dir);
  fs::create_directories(root / "snapshots");

  write_text_file(root / "config.snapshot", cfg.to_text());

  {
    std::ofstream out(root / "metrics.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write metrics.csv");
    write_metrics_csv(record.series, out);
  }

  write_text_file(root / "summary.txt", format_summary(record.summary) + "\n");

  {
    std::ostringstream log;
    for (const std::string& line : record.diagnostics) log << line << '\n';
    write_text_file(root / "diagnostics.log", log.str());
  }

  for (const RunSnapshot& snap : record.snapshots) {
    const std::string label = format_time_label(snap.t);
    write_snapshot_field(root / "snapshots", label, "", snap.posterior_mean);
    write_snapshot_field(root / "snapshots", label, "truth", snap.truth);
    write_snapshot_field(root / "snapshots", label, "variance", snap.variance);
    write_snapshot_field(root / "snapshots", label, "s_x", snap.s_x);
    write_snapshot_field(root / "snapshots", label, "s_y", snap.s_y);
    write_snapshot_field(root / "snapshots", label, "s_diag", snap.s_diag);
  }
}

RunRecord load_run_dir(const std::string& run_dir, ScenarioConfig* cfg_out) {
  const fs::path root(run_dir);
  ScenarioConfig cfg = ScenarioConfig::from_file((root / "config.snapshot").string());
  if (cfg_out) *cfg_out = cfg;

  RunRecord record;
  record.config_hash = fnv1a64(cfg.to_text());
  {
    std::ifstream in(root / "metrics.csv", std::ios::binary);
    if (!in) throw std::runtime_error("run dir: missing metrics.csv");
    record.series = read_metrics_csv(in);
  }
  if (record.series.size() > 0) record.summary = summarize(record.series);

  {
    std::ifstream in(root / "diagnostics.log");
    std::string line;
    while (std::getline(in, line)) record.diagnostics.push_back(line);
  }

  for (double t : cfg.snapshot_times) {
    const std::string label = format_time_label(t);
    const fs::path base = root / "snapshots" / (label + ".field");
    if (!fs::exists(base)) continue;
    auto load = [&](const std::string& kind) {
      const std::string name = kind.empty() ? label + ".field" : label + "." + kind + ".field";
      std::ifstream in(root / "snapshots" / name, std::ios::binary);
      if (!in) throw std::runtime_error("run dir: missing snapshot '" + name + "'");
      return read_field_binary(in, cfg.grid);
    };
    RunSnapshot snap;
    snap.t = t;
    snap.posterior_mean = load("");
    snap.truth = load("truth");
    snap.variance = load("variance");
    snap.s_x = load("s_x");
    snap.s_y = load("s_y");
    snap.s_diag = load("s_diag");
    record.snapshots.push_back(std::move(snap));
  }
  return record;
}

PlotRequest PlotRequest::parse(const std::string& text) {
  PlotRequest req;
  if (text == "metrics") {
    req.what = What::Metrics;
    return req;
  }
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') {
    throw std::invalid_argument("plot request: expected metrics, cross_section(y,t) or "
                                "stats_field(kind,t)");
  }
  const std::string head = text.substr(0, open);
  const std::string args = text.substr(open + 1, text.size() - open - 2);
  const auto comma = args.find(',');
  if (comma == std::string::npos) {
    throw std::invalid_argument("plot request: expected two arguments");
  }
  const std::string a0 = trim(args.substr(0, comma));
  const std::string a1 = trim(args.substr(comma + 1));
  if (head == "cross_section") {
    req.what = What::CrossSection;
    req.y_value = parse_double(a0);
    req.t = parse_double(a1);
  } else if (head == "stats_field") {
    req.what = What::StatsField;
    req.kind = a0;
    if (req.kind != "variance" && req.kind != "s_x" && req.kind != "s_y" &&
        req.kind != "s_diag") {
      throw std::invalid_argument("plot request: kind must be variance, s_x, s_y or s_diag");
    }
    req.t = parse_double(a1);
  } else {
    throw std::invalid_argument("plot request: unknown kind '" + head + "'");
  }
  return req;
}

void emit_plot_data(const RunRecord& record, const PlotRequest& request, std::ostream& out) {
  if (request.what == PlotRequest::What::Metrics) {
    write_metrics_csv(record.series, out);
    return;
  }
  const RunSnapshot* snap = nullptr;
  for (const RunSnapshot& s : record.snapshots) {
    if (times_match(s.t, request.t)) {
      snap = &s;
      break;
    }
  }
  if (!snap) {
    throw std::invalid_argument("plot request: no snapshot recorded at t=" +
                                format_double(request.t));
  }

  if (request.what == PlotRequest::What::CrossSection) {
    const Grid2D& g = snap->posterior_mean.grid();
    if (request.y_value < g.y_min || request.y_value > g.y_max) {
      throw std::invalid_argument("plot request: y outside domain");
    }
    const int j = static_cast<int>(std::lround((request.y_value - g.y_min) / g.dy));
    out << "x,posterior,truth,error\n";
    for (int i = 0; i < g.nx; ++i) {
      const double post = snap->posterior_mean(i, j);
      const double tru = snap->truth(i, j);
      out << format_double(g.x(i)) << ',' << format_double(post) << ',' << format_double(tru)
          << ',' << format_double(std::abs(post - tru)) << '\n';
    }
    return;
  }

  const Field2D* f = nullptr;
  if (request.kind == "variance") f = &snap->variance;
  if (request.kind == "s_x") f = &snap->s_x;
  if (request.kind == "s_y") f = &snap->s_y;
  if (request.kind == "s_diag") f = &snap->s_diag;
  const Grid2D& g = f->grid();
  out << "x,y,value\n";
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      out << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ','
          << format_double((*f)(i, j)) << '\n';
    }
  }
}

}  // namespace sida
