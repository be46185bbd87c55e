/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "sida/grid.hpp"
#include "sida/rng.hpp"
#include "sida/solver.hpp"

namespace sida {

/// K fields on one shared grid.
struct Ensemble {
  std::vector<Field2D> members;

  int size() const { return static_cast<int>(members.size()); }
  const Grid2D& grid() const { return members.front().grid(); }
};

/// Mean field plus the deviation matrix X with column k equal to
/// (flatten(member_k) - flatten(mean)) / sqrt(K-1), so X X^T is the sample
/// covariance.
struct CenteredEnsemble {
  Field2D mean;
  Eigen::MatrixXd deviations;  // (nx*ny) x K

  int ensemble_size() const { return static_cast<int>(deviations.cols()); }
};

/// Member k = u0 + eta_k, eta_k i.i.d. Gaussian(0, noise_std^2) per grid point.
/// Noise is drawn in member-major, flatten-order sequence from the stream.
Ensemble init_ensemble(const Field2D& u0, int ensemble_size, double noise_std,
                       RngStream& rng);

/// Each member advanced independently through the model dynamics.
Ensemble forecast(const Ensemble& ens, int n_steps, double dt, const PdeModel& model);

Field2D ensemble_mean(const Ensemble& ens);

CenteredEnsemble center(const Ensemble& ens);

/// Multiplicative inflation: deviations scaled by alpha (>= 1), mean unchanged.
CenteredEnsemble inflate(CenteredEnsemble ce, double alpha);

/// Checkpoint format: header of three little-endian u64 (K, nx, ny) followed
/// by K fields in the field binary format.
void write_ensemble_checkpoint(const Ensemble& ens, std::ostream& out);
Ensemble read_ensemble_checkpoint(std::istream& in, const Grid2D& grid);

}  // namespace sida
