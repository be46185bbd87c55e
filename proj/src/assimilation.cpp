/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/assimilation.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sida {

ObservationModel ObservationModel::dense(const Grid2D& grid, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("ObservationModel: gamma must be >= 0");
  ObservationModel obs;
  obs.pattern = Pattern::Dense;
  obs.grid = grid;
  obs.gamma = gamma;
  obs.selection.resize(grid.size());
  for (int m = 0; m < grid.size(); ++m) obs.selection[m] = m;
  return obs;
}

ObservationModel ObservationModel::checkerboard(const Grid2D& grid, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("ObservationModel: gamma must be >= 0");
  ObservationModel obs;
  obs.pattern = Pattern::Checkerboard;
  obs.grid = grid;
  obs.gamma = gamma;
  // (i+j) mod 2 == 0 with 1-based indices; the parity matches 0-based i+j.
  for (int m = 0; m < grid.size(); ++m) {
    const int i = m % grid.nx, j = m / grid.nx;
    if ((i + j) % 2 == 0) obs.selection.push_back(m);
  }
  return obs;
}

Eigen::VectorXd ObservationModel::select(const Eigen::VectorXd& full) const {
  if (full.size() != grid.size()) {
    throw std::invalid_argument("ObservationModel::select: state size mismatch");
  }
  Eigen::VectorXd out(m_obs());
  for (int p = 0; p < m_obs(); ++p) out(p) = full(selection[p]);
  return out;
}

Eigen::VectorXd ObservationModel::select_field(const Field2D& f) const {
  if (f.grid() != grid) {
    throw std::invalid_argument("ObservationModel::select_field: grid mismatch");
  }
  Eigen::VectorXd out(m_obs());
  for (int p = 0; p < m_obs(); ++p) out(p) = f.data()[selection[p]];
  return out;
}

Eigen::VectorXd observe_truth(const Field2D& truth, const ObservationModel& obs,
                              RngStream& rng) {
  Eigen::VectorXd y = obs.select_field(truth);
  if (obs.gamma > 0.0) {
    for (int p = 0; p < y.size(); ++p) y(p) += rng.normal(0.0, obs.gamma);
  }
  return y;
}

namespace {

// Innovation solve core: m = prior + W H^T S^-1 (y - H prior) with
// S = H W H^T + gamma^2 I assembled sparse. Returns false when the Cholesky
// factorization reports failure.
bool gain_solve(const Field2D& prior_mean, const Eigen::VectorXd& y,
                const ObservationModel& obs, const WeightingMatrix& w, Field2D* out,
                double* condition) {
  const int n = prior_mean.size();
  const int mo = obs.m_obs();
  const Eigen::Map<const Eigen::VectorXd> prior(prior_mean.data(), n);

  Eigen::SparseMatrix<double> w_sp = w.to_sparse();
  Eigen::SparseMatrix<double> h(mo, n);
  {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mo);
    for (int p = 0; p < mo; ++p) trip.emplace_back(p, obs.selection[p], 1.0);
    h.setFromTriplets(trip.begin(), trip.end());
  }
  Eigen::SparseMatrix<double> innovation = h * w_sp * h.transpose();
  {
    Eigen::SparseMatrix<double> gamma_sq(mo, mo);
    gamma_sq.setIdentity();
    gamma_sq *= obs.gamma * obs.gamma;
    innovation += gamma_sq;
  }

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(innovation);
  if (llt.info() != Eigen::Success) return false;

  const Eigen::VectorXd residual = y - obs.select(prior);
  const Eigen::VectorXd z = llt.solve(residual);
  if (llt.info() != Eigen::Success) return false;

  Eigen::VectorXd scattered = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < mo; ++p) scattered(obs.selection[p]) = z(p);
  const Eigen::VectorXd update = w.multiply(scattered);

  *out = prior_mean;
  for (int m = 0; m < n; ++m) out->data()[m] += update(m);

  if (condition) {
    const Eigen::SparseMatrix<double> lower = llt.matrixL();
    const Eigen::VectorXd ldiag = lower.diagonal();
    const double lo = ldiag.minCoeff(), hi = ldiag.maxCoeff();
    *condition = lo > 0.0 ? (hi / lo) * (hi / lo) : std::numeric_limits<double>::infinity();
  }
  return true;
}

}  // namespace

Field2D posterior_mean_general(const Field2D& prior_mean, const Eigen::VectorXd& y,
                               const ObservationModel& obs, const WeightingMatrix& w,
                               AnalysisDiagnostics* diag) {
  if (y.size() != obs.m_obs()) {
    throw std::invalid_argument("posterior_mean: observation vector size mismatch");
  }
  if (w.n() != prior_mean.size()) {
    throw std::invalid_argument("posterior_mean: weighting size mismatch");
  }
  Field2D out(prior_mean.grid());
  double condition = 0.0;
  if (gain_solve(prior_mean, y, obs, w, &out, &condition)) {
    if (diag) diag->innovation_condition = condition;
    return out;
  }
  // Innovation factorization failed: retry with the diagonal part of W.
  const WeightingMatrix w_diag = w.diagonal_part();
  if (!gain_solve(prior_mean, y, obs, w_diag, &out, &condition)) {
    throw std::runtime_error("posterior_mean: innovation solve failed even for diagonal W");
  }
  if (diag) {
    diag->diagonal_fallback = true;
    diag->innovation_condition = condition;
    diag->notes.push_back("innovation factorization failed; used diagonal part of W");
  }
  return out;
}

Field2D posterior_mean(const Field2D& prior_mean, const Eigen::VectorXd& y,
                       const ObservationModel& obs, const WeightingMatrix& w,
                       AnalysisDiagnostics* diag) {
  if (obs.pattern == ObservationModel::Pattern::Dense &&
      w.shape() == WeightingMatrix::Shape::Diagonal) {
    if (y.size() != obs.m_obs()) {
      throw std::invalid_argument("posterior_mean: observation vector size mismatch");
    }
    if (w.n() != prior_mean.size()) {
      throw std::invalid_argument("posterior_mean: weighting size mismatch");
    }
    // Pointwise: m_i = (w_i y_i + gamma^2 prior_i) / (w_i + gamma^2).
    const double g2 = obs.gamma * obs.gamma;
    Field2D out(prior_mean.grid());
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int m = 0; m < prior_mean.size(); ++m) {
      const double wm = w.diag()(m);
      out.data()[m] = (wm * y(m) + g2 * prior_mean.data()[m]) / (wm + g2);
      lo = std::min(lo, wm + g2);
      hi = std::max(hi, wm + g2);
    }
    if (diag) diag->innovation_condition = hi / lo;
    return out;
  }
  return posterior_mean_general(prior_mean, y, obs, w, diag);
}

Eigen::MatrixXd transform_operator(const CenteredEnsemble& ce, const ObservationModel& obs) {
  if (!(obs.gamma > 0.0)) {
    throw std::invalid_argument("transform_operator: gamma must be positive");
  }
  const int k_count = ce.ensemble_size();
  const int mo = obs.m_obs();
  Eigen::MatrixXd hx(mo, k_count);
  for (int p = 0; p < mo; ++p) hx.row(p) = ce.deviations.row(obs.selection[p]);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k_count, k_count);
  a.noalias() += hx.transpose() * hx / (obs.gamma * obs.gamma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("transform_operator: eigendecomposition failed");
  }
  // Eigenvalues of a are >= 1, so the inverse has spectrum in (0, 1].
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

Ensemble posterior_ensemble(const CenteredEnsemble& ce, const Field2D& posterior_mean,
                            const Eigen::MatrixXd& transform) {
  const int k_count = ce.ensemble_size();
  if (transform.rows() != k_count || transform.cols() != k_count) {
    throw std::invalid_argument("posterior_ensemble: transform size mismatch");
  }
  if (posterior_mean.size() != ce.deviations.rows()) {
    throw std::invalid_argument("posterior_ensemble: mean size mismatch");
  }
  if (!transform.isApprox(transform.transpose(), 1e-10)) {
    throw std::invalid_argument("posterior_ensemble: transform is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(transform);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("posterior_ensemble: eigendecomposition failed");
  }
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("posterior_ensemble: transform is not positive definite");
  }
  const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(1e-14);
  const Eigen::MatrixXd root = eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal() *
                               eig.eigenvectors().transpose();

  Eigen::MatrixXd z = ce.deviations * root;
  // Re-center so the members average exactly to the posterior mean.
  z.colwise() -= z.rowwise().mean().eval();

  const double scale = std::sqrt(static_cast<double>(k_count - 1));
  Ensemble out;
  out.members.reserve(k_count);
  for (int k = 0; k < k_count; ++k) {
    Field2D member = posterior_mean;
    const double* col = z.col(k).data();
    for (int m = 0; m < member.size(); ++m) member.data()[m] += scale * col[m];
    out.members.push_back(std::move(member));
  }
  return out;
}

AnalysisResult analysis_step(const Ensemble& ens, const Eigen::VectorXd& y,
                             const ObservationModel& obs, const WeightingConfig& scheme) {
  if (ens.grid() != obs.grid) {
    throw std::invalid_argument("analysis_step: ensemble and observation grids differ");
  }
  CenteredEnsemble ce = center(ens);
  const bool inflate_members = scheme.inflate_ensemble.value_or(scheme.covariance_based());
  if (inflate_members && scheme.alpha > 1.0) {
    ce = inflate(std::move(ce), scheme.alpha);
  }

  WeightingMatrix w = WeightingMatrix::diagonal(Eigen::VectorXd::Zero(ens.grid().size()));
  switch (scheme.kind) {
    case WeightingConfig::Kind::CovDiag:
      w = assemble_W_C_diag(ens, scheme.alpha);
      break;
    case WeightingConfig::Kind::CovBanded:
      w = assemble_W_C_banded(ens, scheme.alpha, build_localization(ens.grid()));
      break;
    case WeightingConfig::Kind::GradDiag:
      w = assemble_W_S_diag(ens, scheme.theta, scheme.phi, scheme.beta_tilde);
      break;
    case WeightingConfig::Kind::GradBanded: {
      const LocalizationMatrix loc = build_localization(ens.grid());
      if (scheme.use_mask) {
        const RefinementMask mask = build_mask(ce.mean, scheme.d_thresh);
        w = assemble_W_S_banded(ens, scheme.theta, scheme.phi, scheme.beta_tilde, loc, &mask);
      } else {
        w = assemble_W_S_banded(ens, scheme.theta, scheme.phi, scheme.beta_tilde, loc);
      }
      break;
    }
  }

  AnalysisResult result;
  result.posterior_mean = posterior_mean(ce.mean, y, obs, w, &result.diagnostics);
  const Eigen::MatrixXd transform = transform_operator(ce, obs);
  result.posterior_ensemble = posterior_ensemble(ce, result.posterior_mean, transform);
  return result;
}

}  // namespace sida
