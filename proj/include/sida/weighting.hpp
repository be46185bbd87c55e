/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <iosfwd>
#include <utility>

#include "sida/ensemble.hpp"
#include "sida/grid.hpp"
#include "sida/statistics.hpp"

namespace sida {

/// Symmetric weighting matrix over flattened grid indices: either diagonal or
/// five-banded (main diagonal, first super/sub-diagonal, nx-th
/// super/sub-diagonal). Stored bands serve as both super- and sub-diagonals.
class WeightingMatrix {
 public:
  enum class Shape { Diagonal, FiveBanded };

  static WeightingMatrix diagonal(Eigen::VectorXd diag);
  static WeightingMatrix five_banded(int nx, Eigen::VectorXd diag, Eigen::VectorXd band1,
                                     Eigen::VectorXd band_nx);

  Shape shape() const { return shape_; }
  int n() const { return static_cast<int>(diag_.size()); }
  int nx() const { return nx_; }

  const Eigen::VectorXd& diag() const { return diag_; }
  const Eigen::VectorXd& band1() const { return band1_; }
  const Eigen::VectorXd& band_nx() const { return band_nx_; }

  double entry(int m, int mp) const;

  /// Diagonal-only copy, used by the analysis fallback path.
  WeightingMatrix diagonal_part() const { return diagonal(diag_); }

  /// Replace every diagonal entry d by max(d, 1e-12 * max(max diag, 1)).
  void apply_floor();

  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const;
  Eigen::SparseMatrix<double> to_sparse() const;
  Eigen::MatrixXd to_dense() const;

  /// Debug dump: CSV rows (band, index, value) with band in {0, +1, +nx} and
  /// index the 1-based flat index of the band entry's row.
  void dump_banded_csv(std::ostream& out) const;

 private:
  Shape shape_ = Shape::Diagonal;
  int nx_ = 0;
  Eigen::VectorXd diag_;
  Eigen::VectorXd band1_;    // entry m pairs (m, m+1); length n-1
  Eigen::VectorXd band_nx_;  // entry m pairs (m, m+nx); length n-nx
};

/// Five-banded localization operator: 1 on the diagonal, 0.5 on the first
/// bands except across column boundaries, 0.5 on the nx-th bands.
struct LocalizationMatrix {
  int nx = 0;
  int ny = 0;
  Eigen::VectorXd band1;    // 0.5 or 0 (column-boundary exclusion)
  Eigen::VectorXd band_nx;  // 0.5

  int n() const { return nx * ny; }
  double entry(int m, int mp) const;
};

/// Binary five-banded mask with unit diagonal; a 0 marks a neighbor pair whose
/// directional discrepancy exceeds the threshold.
struct RefinementMask {
  int nx = 0;
  int ny = 0;
  Eigen::VectorXd band1;
  Eigen::VectorXd band_nx;

  int n() const { return nx * ny; }
  double entry(int m, int mp) const;
};

LocalizationMatrix build_localization(const Grid2D& grid);

/// One-sided interior derivative magnitudes of the prior mean:
/// D^x(i,j) = |mean(i+1,j) - mean(i,j)| / dx of size (nx-1) x ny, and D^y
/// analogously of size nx x (ny-1). No periodic wrap.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> directional_derivative_fields(
    const Field2D& prior_mean);

RefinementMask build_mask(const Field2D& prior_mean, double d_thresh);

/// W_C^D: diagonal alpha^2 * variance.
WeightingMatrix assemble_W_C_diag(const Ensemble& ens, double alpha);

/// W_C: five-banded alpha^2 * sqrt(V_m) R_mm' sqrt(V_m') * T_mm'.
WeightingMatrix assemble_W_C_banded(const Ensemble& ens, double alpha,
                                    const LocalizationMatrix& loc);

/// W_S^D: diagonal beta * S^D with beta = beta_tilde / max(S^D).
WeightingMatrix assemble_W_S_diag(const Ensemble& ens, double theta, double phi,
                                  double beta_tilde);

/// W_S (and its unmasked variant): five-banded
/// beta * sqrt(S_mm) R_mm' sqrt(S_m'm') * T_mm' (* M_mm' when mask given).
WeightingMatrix assemble_W_S_banded(const Ensemble& ens, double theta, double phi,
                                    double beta_tilde, const LocalizationMatrix& loc,
                                    const RefinementMask* mask = nullptr);

}  // namespace sida
