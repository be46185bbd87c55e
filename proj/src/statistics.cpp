/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sida {

namespace {

inline double clamp_corr(double r) { return std::clamp(r, -1.0, 1.0); }

inline double abs_pow(double v, double theta) {
  const double a = std::abs(v);
  if (theta == 1.0) return a;
  if (theta == 2.0) return a * a;
  return std::pow(a, theta);
}

}  // namespace

Field2D pointwise_variance(const Ensemble& ens) {
  if (ens.size() < 2) throw std::invalid_argument("pointwise_variance: K must be >= 2");
  const Field2D mean = ensemble_mean(ens);
  Field2D var(ens.grid(), 0.0);
  for (const Field2D& member : ens.members) {
    for (int m = 0; m < var.size(); ++m) {
      const double d = member.data()[m] - mean.data()[m];
      var.data()[m] += d * d;
    }
  }
  const double inv = 1.0 / (ens.size() - 1);
  for (double& v : var.values()) v *= inv;
  return var;
}

double pearson_entry(const Ensemble& ens, int m, int m2) {
  const int k_count = ens.size();
  if (k_count < 2) throw std::invalid_argument("pearson_entry: K must be >= 2");
  const int n = ens.grid().size();
  if (m < 0 || m >= n || m2 < 0 || m2 >= n) {
    throw std::out_of_range("pearson_entry: flat index outside grid");
  }
  double mean_a = 0.0, mean_b = 0.0;
  for (const Field2D& member : ens.members) {
    mean_a += member.data()[m];
    mean_b += member.data()[m2];
  }
  mean_a /= k_count;
  mean_b /= k_count;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (const Field2D& member : ens.members) {
    const double da = member.data()[m] - mean_a;
    const double db = member.data()[m2] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  const double inv = 1.0 / (k_count - 1);
  cov *= inv;
  var_a *= inv;
  var_b *= inv;
  if (var_a < kVarianceEps || var_b < kVarianceEps) {
    return m == m2 ? 1.0 : 0.0;
  }
  if (m == m2) return 1.0;
  return clamp_corr(cov / std::sqrt(var_a * var_b));
}

GradientStats gradient_stats(const Ensemble& ens, double theta, double phi) {
  if (!(theta > 0.0) || !(phi > 0.0)) {
    throw std::invalid_argument("gradient_stats: theta and phi must be positive");
  }
  const Grid2D& g = ens.grid();
  GradientStats stats{Field2D(g, 0.0), Field2D(g, 0.0), Field2D(g, 0.0), theta, phi};
  for (const Field2D& member : ens.members) {
    const Field2D gx = central_diff(member, Direction::X);
    const Field2D gy = central_diff(member, Direction::Y);
    for (int m = 0; m < g.size(); ++m) {
      stats.s_x.data()[m] += abs_pow(gx.data()[m], theta);
      stats.s_y.data()[m] += abs_pow(gy.data()[m], theta);
    }
  }
  const double inv_k = 1.0 / ens.size();  // 1/K, as defined (not 1/(K-1))
  for (int m = 0; m < g.size(); ++m) {
    stats.s_x.data()[m] *= inv_k;
    stats.s_y.data()[m] *= inv_k;
    stats.s_diag.data()[m] =
        std::pow(stats.s_x.data()[m], phi) + std::pow(stats.s_y.data()[m], phi);
  }
  return stats;
}

CorrelationMatrix correlation_matrix(const Ensemble& ens) {
  const int n = ens.grid().size();
  if (n > 4096) {
    throw std::invalid_argument(
        "correlation_matrix: dense assembly is limited to nx*ny <= 4096");
  }
  const CenteredEnsemble ce = center(ens);
  Eigen::VectorXd var = ce.deviations.rowwise().squaredNorm();
  CorrelationMatrix r(n, n);
  for (int a = 0; a < n; ++a) {
    r(a, a) = 1.0;
    const bool a_deg = var(a) < kVarianceEps;
    for (int b = a + 1; b < n; ++b) {
      double val = 0.0;
      if (!a_deg && var(b) >= kVarianceEps) {
        val = clamp_corr(ce.deviations.row(a).dot(ce.deviations.row(b)) /
                         std::sqrt(var(a) * var(b)));
      }
      r(a, b) = val;
      r(b, a) = val;
    }
  }
  return r;
}

CorrelationMatrix structural_correlation(CorrelationMatrix r, const Field2D& prior_mean,
                                         double d_thresh) {
  if (!(d_thresh > 0.0)) {
    throw std::invalid_argument("structural_correlation: d_thresh must be positive");
  }
  const Grid2D& g = prior_mean.grid();
  const int n = g.size();
  if (r.rows() != n || r.cols() != n) {
    throw std::invalid_argument("structural_correlation: matrix does not match grid");
  }
  for (int a = 0; a < n; ++a) {
    const int ia = a % g.nx, ja = a / g.nx;
    for (int b = a + 1; b < n; ++b) {
      const int ib = b % g.nx, jb = b / g.nx;
      const double ddx = (ia - ib) * g.dx;
      const double ddy = (ja - jb) * g.dy;
      const double dist = std::sqrt(ddx * ddx + ddy * ddy);
      const double d = std::abs(prior_mean.data()[a] - prior_mean.data()[b]) / dist;
      if (d > d_thresh) {
        r(a, b) = 0.0;
        r(b, a) = 0.0;
      }
    }
    r(a, a) = 1.0;
  }
  return r;
}

Eigen::VectorXd pearson_band(const CenteredEnsemble& ce, int offset) {
  const int n = static_cast<int>(ce.deviations.rows());
  if (offset < 1 || offset >= n) {
    throw std::invalid_argument("pearson_band: offset outside matrix");
  }
  Eigen::VectorXd var = ce.deviations.rowwise().squaredNorm();
  Eigen::VectorXd band(n - offset);
  for (int m = 0; m < n - offset; ++m) {
    if (var(m) < kVarianceEps || var(m + offset) < kVarianceEps) {
      band(m) = 0.0;
      continue;
    }
    band(m) = clamp_corr(ce.deviations.row(m).dot(ce.deviations.row(m + offset)) /
                         std::sqrt(var(m) * var(m + offset)));
  }
  return band;
}

}  // namespace sida
