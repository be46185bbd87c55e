/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sida/grid.hpp"

namespace sida {

/// Thrown when a relative-error denominator is identically zero.
struct ZeroDenominatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RelativeErrors {
  double l1 = 0.0;
  double l2 = 0.0;
};

/// Per-assimilation-time error series. An undefined pattern correlation is
/// stored as NaN and excluded from burn-in averages.
struct MetricSeries {
  std::vector<double> times;
  std::vector<double> err_l1;
  std::vector<double> err_l2;
  std::vector<double> pcorr;

  int size() const { return static_cast<int>(times.size()); }
  void append(double t, double l1, double l2, double pc);
};

struct SummaryMetrics {
  double e_l1 = 0.0;
  double e_l2 = 0.0;
  double pc = 0.0;
  int q0 = 0;  // 1-based start of the averaging window
};

Field2D pointwise_error(const Field2D& u, const Field2D& truth);

/// Relative l1 and l2 errors with domain-averaged numerator and denominator.
RelativeErrors relative_errors(const Field2D& u, const Field2D& truth);

/// Spatial Pearson correlation between the two fields; empty when either field
/// has zero spatial variance.
std::optional<double> pattern_correlation(const Field2D& u, const Field2D& truth);

/// Means over the inclusive window q = q0..L_obs with q0 = ceil(L_obs/2).
SummaryMetrics summarize(const MetricSeries& series);

/// CSV with header t,err_l1,err_l2,pcorr; values render round-trip exactly.
void write_metrics_csv(const MetricSeries& series, std::ostream& out);
MetricSeries read_metrics_csv(std::istream& in);

}  // namespace sida
