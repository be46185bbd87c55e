/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "sida/ensemble.hpp"
#include "sida/grid.hpp"
#include "sida/rng.hpp"
#include "sida/weighting.hpp"

namespace sida {

/// Linear selection operator H with Gamma = gamma^2 I. Dense observes every
/// grid point; Checkerboard observes points with (i+j) even (1-based indices).
struct ObservationModel {
  enum class Pattern { Dense, Checkerboard };

  Pattern pattern = Pattern::Dense;
  Grid2D grid;
  double gamma = 0.0;
  std::vector<int> selection;  // observed 0-based flat indices, ascending

  int m_obs() const { return static_cast<int>(selection.size()); }

  static ObservationModel dense(const Grid2D& grid, double gamma);
  static ObservationModel checkerboard(const Grid2D& grid, double gamma);

  /// H applied to a flattened state.
  Eigen::VectorXd select(const Eigen::VectorXd& full) const;
  Eigen::VectorXd select_field(const Field2D& f) const;
};

struct AnalysisDiagnostics {
  bool diagonal_fallback = false;
  double innovation_condition = 0.0;  // rough estimate from the factorization
  std::vector<std::string> notes;
};

struct AnalysisResult {
  Field2D posterior_mean;
  Ensemble posterior_ensemble;
  AnalysisDiagnostics diagnostics;
};

/// Weighting scheme selection for one analysis step.
struct WeightingConfig {
  enum class Kind { CovDiag, CovBanded, GradDiag, GradBanded };

  Kind kind = Kind::CovDiag;
  double alpha = 1.0;        // covariance schemes (and optional gradient-scheme inflation)
  double theta = 1.0;        // gradient schemes
  double phi = 1.0;
  double beta_tilde = 1e-3;
  bool use_mask = false;     // GradBanded only
  double d_thresh = 4.0;
  /// Ensemble (transform) inflation: defaults to on for covariance schemes and
  /// off for gradient schemes when unset.
  std::optional<bool> inflate_ensemble;

  bool covariance_based() const { return kind == Kind::CovDiag || kind == Kind::CovBanded; }
};

/// y = H truth + eta, eta i.i.d. Gaussian(0, gamma^2) drawn per observed point
/// in ascending selection order.
Eigen::VectorXd observe_truth(const Field2D& truth, const ObservationModel& obs,
                              RngStream& rng);

/// argmin of 1/2 |y - Hv|^2_Gamma + 1/2 |v - prior|^2_W via the gain form
/// prior + W H^T (H W H^T + Gamma)^-1 (y - H prior). A failed factorization of
/// the innovation matrix falls back to the diagonal part of W and is recorded
/// in the diagnostics.
Field2D posterior_mean(const Field2D& prior_mean, const Eigen::VectorXd& y,
                       const ObservationModel& obs, const WeightingMatrix& w,
                       AnalysisDiagnostics* diag = nullptr);

/// Gain-form solve without the dense-observation diagonal shortcut; exposed so
/// tests can check the two paths agree.
Field2D posterior_mean_general(const Field2D& prior_mean, const Eigen::VectorXd& y,
                               const ObservationModel& obs, const WeightingMatrix& w,
                               AnalysisDiagnostics* diag = nullptr);

/// T = [I + (HX)^T Gamma^-1 (HX)]^-1, symmetric positive definite with
/// spectrum in (0, 1]. Requires gamma > 0.
Eigen::MatrixXd transform_operator(const CenteredEnsemble& ce, const ObservationModel& obs);

/// Member k = posterior_mean + sqrt(K-1) * (X T^{1/2})_{:,k} with the unique
/// symmetric SPD square root (eigenvalues clamped at 1e-14). Deviations are
/// re-centered after the transform so the members average exactly to the mean.
Ensemble posterior_ensemble(const CenteredEnsemble& ce, const Field2D& posterior_mean,
                            const Eigen::MatrixXd& transform);

/// Full analysis: center, inflate per scheme, assemble W, posterior mean,
/// transform, posterior ensemble.
AnalysisResult analysis_step(const Ensemble& ens, const Eigen::VectorXd& y,
                             const ObservationModel& obs, const WeightingConfig& scheme);

}  // namespace sida
