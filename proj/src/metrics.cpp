/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/metrics.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "sida/format.hpp"

namespace sida {

void MetricSeries::append(double t, double l1, double l2, double pc) {
  if (!times.empty() && t <= times.back()) {
    throw std::invalid_argument("MetricSeries: times must be strictly increasing");
  }
  times.push_back(t);
  err_l1.push_back(l1);
  err_l2.push_back(l2);
  pcorr.push_back(pc);
}

Field2D pointwise_error(const Field2D& u, const Field2D& truth) {
  if (u.grid() != truth.grid()) {
    throw std::invalid_argument("pointwise_error: grid mismatch");
  }
  Field2D err(u.grid());
  for (int m = 0; m < u.size(); ++m) {
    err.data()[m] = std::abs(u.data()[m] - truth.data()[m]);
  }
  return err;
}

RelativeErrors relative_errors(const Field2D& u, const Field2D& truth) {
  if (u.grid() != truth.grid()) {
    throw std::invalid_argument("relative_errors: grid mismatch");
  }
  const double inv_n = 1.0 / u.size();
  double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
  for (int m = 0; m < u.size(); ++m) {
    const double d = u.data()[m] - truth.data()[m];
    const double t = truth.data()[m];
    num1 += std::abs(d);
    den1 += std::abs(t);
    num2 += d * d;
    den2 += t * t;
  }
  if (den1 == 0.0 || den2 == 0.0) {
    throw ZeroDenominatorError("relative_errors: truth field is identically zero");
  }
  RelativeErrors out;
  out.l1 = (num1 * inv_n) / (den1 * inv_n);
  out.l2 = std::sqrt(num2 * inv_n) / std::sqrt(den2 * inv_n);
  return out;
}

std::optional<double> pattern_correlation(const Field2D& u, const Field2D& truth) {
  if (u.grid() != truth.grid()) {
    throw std::invalid_argument("pattern_correlation: grid mismatch");
  }
  const int n = u.size();
  double mean_u = 0.0, mean_t = 0.0;
  for (int m = 0; m < n; ++m) {
    mean_u += u.data()[m];
    mean_t += truth.data()[m];
  }
  mean_u /= n;
  mean_t /= n;
  double cov = 0.0, var_u = 0.0, var_t = 0.0;
  for (int m = 0; m < n; ++m) {
    const double du = u.data()[m] - mean_u;
    const double dt = truth.data()[m] - mean_t;
    cov += du * dt;
    var_u += du * du;
    var_t += dt * dt;
  }
  if (var_u == 0.0 || var_t == 0.0) return std::nullopt;
  return cov / (std::sqrt(var_u) * std::sqrt(var_t));
}

SummaryMetrics summarize(const MetricSeries& series) {
  const int l_obs = series.size();
  if (l_obs == 0) throw std::invalid_argument("summarize: empty series");
  SummaryMetrics s;
  s.q0 = (l_obs + 1) / 2;  // ceil(L_obs / 2)
  const int count = l_obs - s.q0 + 1;
  double sum1 = 0.0, sum2 = 0.0, sum_pc = 0.0;
  int pc_count = 0;
  for (int q = s.q0; q <= l_obs; ++q) {
    sum1 += series.err_l1[q - 1];
    sum2 += series.err_l2[q - 1];
    const double pc = series.pcorr[q - 1];
    if (std::isfinite(pc)) {
      sum_pc += pc;
      ++pc_count;
    }
  }
  s.e_l1 = sum1 / count;
  s.e_l2 = sum2 / count;
  s.pc = pc_count > 0 ? sum_pc / pc_count : std::numeric_limits<double>::quiet_NaN();
  return s;
}

void write_metrics_csv(const MetricSeries& series, std::ostream& out) {
  out << "t,err_l1,err_l2,pcorr\n";
  for (int q = 0; q < series.size(); ++q) {
    out << format_double(series.times[q]) << ',' << format_double(series.err_l1[q]) << ','
        << format_double(series.err_l2[q]) << ',' << format_double(series.pcorr[q]) << '\n';
  }
}

MetricSeries read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,err_l1,err_l2,pcorr") {
    throw std::runtime_error("metrics csv: bad header");
  }
  MetricSeries series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double vals[4];
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("metrics csv: short row");
      vals[c] = cell == "nan" || cell == "-nan"
                    ? std::numeric_limits<double>::quiet_NaN()
                    : parse_double(cell);
    }
    series.append(vals[0], vals[1], vals[2], vals[3]);
  }
  return series;
}

}  // namespace sida
