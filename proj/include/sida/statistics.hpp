/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <Eigen/Core>

#include "sida/ensemble.hpp"
#include "sida/grid.hpp"

namespace sida {

/// Below this sample variance a component counts as degenerate: its Pearson
/// correlation is 0 off-diagonal and 1 on-diagonal.
constexpr double kVarianceEps = 1e-14;

/// Directional gradient statistics of the forecast ensemble. s_x and s_y hold
/// the K-averaged |central difference|^theta per point; s_diag aggregates them
/// as s_x^phi + s_y^phi.
struct GradientStats {
  Field2D s_x;
  Field2D s_y;
  Field2D s_diag;
  double theta = 1.0;
  double phi = 1.0;
};

using CorrelationMatrix = Eigen::MatrixXd;

/// Unbiased per-point sample variance (1/(K-1) normalization).
Field2D pointwise_variance(const Ensemble& ens);

/// Sample Pearson correlation between flattened components m and m2 (0-based)
/// across members, clamped to [-1, 1]; degenerate components follow the
/// kVarianceEps convention.
double pearson_entry(const Ensemble& ens, int m, int m2);

/// Gradient statistics with 1/K normalization (not 1/(K-1)), periodic central
/// differences. theta and phi must be positive.
GradientStats gradient_stats(const Ensemble& ens, double theta, double phi);

/// Dense correlation matrix; analysis scale only (nx*ny <= 4096). Production
/// paths use pearson_band instead.
CorrelationMatrix correlation_matrix(const Ensemble& ens);

/// Zeroes entry (m, m') when the directional discrepancy
/// |mean_m - mean_m'| / ||x_m - x_m'|| exceeds d_thresh; the diagonal is set
/// to 1 directly.
CorrelationMatrix structural_correlation(CorrelationMatrix r, const Field2D& prior_mean,
                                         double d_thresh);

/// Pearson correlations of flat components (m, m+offset) for all valid m.
/// offset = 1 gives the first band, offset = nx the nx-th band.
Eigen::VectorXd pearson_band(const CenteredEnsemble& ce, int offset);

}  // namespace sida
