/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/weighting.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "sida/format.hpp"

namespace sida {

WeightingMatrix WeightingMatrix::diagonal(Eigen::VectorXd diag) {
  WeightingMatrix w;
  w.shape_ = Shape::Diagonal;
  w.nx_ = 0;
  w.diag_ = std::move(diag);
  return w;
}

WeightingMatrix WeightingMatrix::five_banded(int nx, Eigen::VectorXd diag,
                                             Eigen::VectorXd band1,
                                             Eigen::VectorXd band_nx) {
  const int n = static_cast<int>(diag.size());
  if (nx < 1 || nx > n) throw std::invalid_argument("WeightingMatrix: bad nx");
  if (band1.size() != n - 1 || band_nx.size() != n - nx) {
    throw std::invalid_argument("WeightingMatrix: band lengths do not match n/nx");
  }
  WeightingMatrix w;
  w.shape_ = Shape::FiveBanded;
  w.nx_ = nx;
  w.diag_ = std::move(diag);
  w.band1_ = std::move(band1);
  w.band_nx_ = std::move(band_nx);
  return w;
}

double WeightingMatrix::entry(int m, int mp) const {
  if (m == mp) return diag_(m);
  if (shape_ == Shape::Diagonal) return 0.0;
  const int lo = std::min(m, mp), d = std::abs(m - mp);
  if (d == 1) return band1_(lo);
  if (d == nx_) return band_nx_(lo);
  return 0.0;
}

void WeightingMatrix::apply_floor() {
  const double top = diag_.size() ? diag_.maxCoeff() : 0.0;
  const double floor = 1e-12 * std::max(top, 1.0);
  for (int m = 0; m < diag_.size(); ++m) diag_(m) = std::max(diag_(m), floor);
}

Eigen::VectorXd WeightingMatrix::multiply(const Eigen::VectorXd& v) const {
  const int size = n();
  if (v.size() != size) throw std::invalid_argument("WeightingMatrix: size mismatch");
  Eigen::VectorXd out = diag_.cwiseProduct(v);
  if (shape_ == Shape::FiveBanded) {
    for (int m = 0; m + 1 < size; ++m) {
      out(m) += band1_(m) * v(m + 1);
      out(m + 1) += band1_(m) * v(m);
    }
    for (int m = 0; m + nx_ < size; ++m) {
      out(m) += band_nx_(m) * v(m + nx_);
      out(m + nx_) += band_nx_(m) * v(m);
    }
  }
  return out;
}

Eigen::SparseMatrix<double> WeightingMatrix::to_sparse() const {
  const int size = n();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(shape_ == Shape::Diagonal ? size : 5 * size);
  for (int m = 0; m < size; ++m) trip.emplace_back(m, m, diag_(m));
  if (shape_ == Shape::FiveBanded) {
    for (int m = 0; m + 1 < size; ++m) {
      if (band1_(m) != 0.0) {
        trip.emplace_back(m, m + 1, band1_(m));
        trip.emplace_back(m + 1, m, band1_(m));
      }
    }
    for (int m = 0; m + nx_ < size; ++m) {
      if (band_nx_(m) != 0.0) {
        trip.emplace_back(m, m + nx_, band_nx_(m));
        trip.emplace_back(m + nx_, m, band_nx_(m));
      }
    }
  }
  Eigen::SparseMatrix<double> s(size, size);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

Eigen::MatrixXd WeightingMatrix::to_dense() const {
  const int size = n();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(size, size);
  for (int m = 0; m < size; ++m) d(m, m) = diag_(m);
  if (shape_ == Shape::FiveBanded) {
    for (int m = 0; m + 1 < size; ++m) d(m, m + 1) = d(m + 1, m) = band1_(m);
    for (int m = 0; m + nx_ < size; ++m) d(m, m + nx_) = d(m + nx_, m) = band_nx_(m);
  }
  return d;
}

void WeightingMatrix::dump_banded_csv(std::ostream& out) const {
  out << "band,index,value\n";
  for (int m = 0; m < diag_.size(); ++m) {
    out << "0," << (m + 1) << ',' << format_double(diag_(m)) << '\n';
  }
  if (shape_ == Shape::FiveBanded) {
    for (int m = 0; m < band1_.size(); ++m) {
      out << "+1," << (m + 1) << ',' << format_double(band1_(m)) << '\n';
    }
    for (int m = 0; m < band_nx_.size(); ++m) {
      out << "+" << nx_ << ',' << (m + 1) << ',' << format_double(band_nx_(m)) << '\n';
    }
  }
}

double LocalizationMatrix::entry(int m, int mp) const {
  if (m == mp) return 1.0;
  const int lo = std::min(m, mp), d = std::abs(m - mp);
  if (d == 1) return band1(lo);
  if (d == nx) return band_nx(lo);
  return 0.0;
}

double RefinementMask::entry(int m, int mp) const {
  if (m == mp) return 1.0;
  const int lo = std::min(m, mp), d = std::abs(m - mp);
  if (d == 1) return band1(lo);
  if (d == nx) return band_nx(lo);
  // Entries off the localization support are never used; treat them as kept.
  return 1.0;
}

LocalizationMatrix build_localization(const Grid2D& grid) {
  LocalizationMatrix loc;
  loc.nx = grid.nx;
  loc.ny = grid.ny;
  const int n = grid.size();
  loc.band1.resize(n - 1);
  for (int m = 0; m < n - 1; ++m) {
    // Pair (m, m+1) in 0-based indices is (m+1, m+2) in the 1-based formula;
    // it is spurious when the 1-based row index m+1 is a multiple of nx.
    loc.band1(m) = ((m + 1) % grid.nx != 0) ? 0.5 : 0.0;
  }
  loc.band_nx = Eigen::VectorXd::Constant(n - grid.nx, 0.5);
  return loc;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> directional_derivative_fields(
    const Field2D& prior_mean) {
  const Grid2D& g = prior_mean.grid();
  Eigen::MatrixXd dx(g.nx - 1, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      dx(i, j) = std::abs(prior_mean(i + 1, j) - prior_mean(i, j)) / g.dx;
    }
  }
  Eigen::MatrixXd dy(g.nx, g.ny - 1);
  for (int j = 0; j + 1 < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      dy(i, j) = std::abs(prior_mean(i, j + 1) - prior_mean(i, j)) / g.dy;
    }
  }
  return {std::move(dx), std::move(dy)};
}

RefinementMask build_mask(const Field2D& prior_mean, double d_thresh) {
  if (!(d_thresh > 0.0)) throw std::invalid_argument("build_mask: d_thresh must be positive");
  const Grid2D& g = prior_mean.grid();
  const auto [dx, dy] = directional_derivative_fields(prior_mean);
  RefinementMask mask;
  mask.nx = g.nx;
  mask.ny = g.ny;
  const int n = g.size();

  // First band: D^x padded with a zero row at the bottom, flattened
  // column-wise, last entry dropped.
  mask.band1.resize(n - 1);
  for (int m = 0; m < n - 1; ++m) {
    const int i = m % g.nx, j = m / g.nx;
    const double deriv = (i + 1 < g.nx) ? dx(i, j) : 0.0;  // padded row
    mask.band1(m) = (deriv > d_thresh) ? 0.0 : 1.0;
  }

  // nx-th band: flattened D^y, already the right length.
  mask.band_nx.resize(n - g.nx);
  for (int m = 0; m < n - g.nx; ++m) {
    const int i = m % g.nx, j = m / g.nx;
    mask.band_nx(m) = (dy(i, j) > d_thresh) ? 0.0 : 1.0;
  }
  return mask;
}

WeightingMatrix assemble_W_C_diag(const Ensemble& ens, double alpha) {
  if (alpha < 1.0) throw std::invalid_argument("assemble_W_C_diag: alpha must be >= 1");
  const Field2D var = pointwise_variance(ens);
  Eigen::VectorXd diag = alpha * alpha *
                         Eigen::Map<const Eigen::VectorXd>(var.data(), var.size());
  WeightingMatrix w = WeightingMatrix::diagonal(std::move(diag));
  w.apply_floor();
  return w;
}

WeightingMatrix assemble_W_C_banded(const Ensemble& ens, double alpha,
                                    const LocalizationMatrix& loc) {
  if (alpha < 1.0) throw std::invalid_argument("assemble_W_C_banded: alpha must be >= 1");
  const Grid2D& g = ens.grid();
  if (loc.nx != g.nx || loc.ny != g.ny) {
    throw std::invalid_argument("assemble_W_C_banded: localization does not match grid");
  }
  const CenteredEnsemble ce = center(ens);
  const int n = g.size();
  const double a2 = alpha * alpha;
  Eigen::VectorXd var = ce.deviations.rowwise().squaredNorm();
  Eigen::VectorXd sd = var.cwiseSqrt();

  Eigen::VectorXd diag = a2 * var;
  const Eigen::VectorXd r1 = pearson_band(ce, 1);
  const Eigen::VectorXd rnx = pearson_band(ce, g.nx);
  Eigen::VectorXd band1(n - 1), band_nx(n - g.nx);
  for (int m = 0; m < n - 1; ++m) {
    band1(m) = a2 * sd(m) * r1(m) * sd(m + 1) * loc.band1(m);
  }
  for (int m = 0; m < n - g.nx; ++m) {
    band_nx(m) = a2 * sd(m) * rnx(m) * sd(m + g.nx) * loc.band_nx(m);
  }
  WeightingMatrix w = WeightingMatrix::five_banded(g.nx, std::move(diag),
                                                   std::move(band1), std::move(band_nx));
  w.apply_floor();
  return w;
}

namespace {

// beta = beta_tilde / ||S^D||_max; a degenerate all-flat ensemble leaves the
// matrix at the regularization floor.
double gradient_scale(const Field2D& s_diag, double beta_tilde) {
  double top = 0.0;
  for (double v : s_diag.values()) top = std::max(top, v);
  if (top < kVarianceEps) return 0.0;
  return beta_tilde / top;
}

}  // namespace

WeightingMatrix assemble_W_S_diag(const Ensemble& ens, double theta, double phi,
                                  double beta_tilde) {
  if (!(beta_tilde > 0.0)) {
    throw std::invalid_argument("assemble_W_S_diag: beta_tilde must be positive");
  }
  const GradientStats stats = gradient_stats(ens, theta, phi);
  const double beta = gradient_scale(stats.s_diag, beta_tilde);
  Eigen::VectorXd diag =
      beta * Eigen::Map<const Eigen::VectorXd>(stats.s_diag.data(), stats.s_diag.size());
  WeightingMatrix w = WeightingMatrix::diagonal(std::move(diag));
  w.apply_floor();
  return w;
}

WeightingMatrix assemble_W_S_banded(const Ensemble& ens, double theta, double phi,
                                    double beta_tilde, const LocalizationMatrix& loc,
                                    const RefinementMask* mask) {
  if (!(beta_tilde > 0.0)) {
    throw std::invalid_argument("assemble_W_S_banded: beta_tilde must be positive");
  }
  const Grid2D& g = ens.grid();
  if (loc.nx != g.nx || loc.ny != g.ny) {
    throw std::invalid_argument("assemble_W_S_banded: localization does not match grid");
  }
  if (mask && (mask->nx != g.nx || mask->ny != g.ny)) {
    throw std::invalid_argument("assemble_W_S_banded: mask does not match grid");
  }
  const GradientStats stats = gradient_stats(ens, theta, phi);
  const double beta = gradient_scale(stats.s_diag, beta_tilde);
  const int n = g.size();
  Eigen::Map<const Eigen::VectorXd> s_diag(stats.s_diag.data(), n);
  Eigen::VectorXd root = s_diag.cwiseSqrt();

  const CenteredEnsemble ce = center(ens);
  const Eigen::VectorXd r1 = pearson_band(ce, 1);
  const Eigen::VectorXd rnx = pearson_band(ce, g.nx);

  Eigen::VectorXd diag = beta * s_diag;
  Eigen::VectorXd band1(n - 1), band_nx(n - g.nx);
  for (int m = 0; m < n - 1; ++m) {
    double v = beta * root(m) * r1(m) * root(m + 1) * loc.band1(m);
    if (mask) v *= mask->band1(m);
    band1(m) = v;
  }
  for (int m = 0; m < n - g.nx; ++m) {
    double v = beta * root(m) * rnx(m) * root(m + g.nx) * loc.band_nx(m);
    if (mask) v *= mask->band_nx(m);
    band_nx(m) = v;
  }
  WeightingMatrix w = WeightingMatrix::five_banded(g.nx, std::move(diag),
                                                   std::move(band1), std::move(band_nx));
  w.apply_floor();
  return w;
}

}  // namespace sida
