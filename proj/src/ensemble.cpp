/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/ensemble.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "parallel_for.hpp"

namespace sida {

Ensemble init_ensemble(const Field2D& u0, int ensemble_size, double noise_std,
                       RngStream& rng) {
  if (ensemble_size < 2) {
    throw std::invalid_argument("init_ensemble: ensemble size must be >= 2");
  }
  if (noise_std < 0.0) {
    throw std::invalid_argument("init_ensemble: noise_std must be >= 0");
  }
  Ensemble ens;
  ens.members.reserve(ensemble_size);
  for (int k = 0; k < ensemble_size; ++k) {
    Field2D member = u0;
    if (noise_std > 0.0) {
      for (double& v : member.values()) v += rng.normal(0.0, noise_std);
    }
    member.ensure_finite("init_ensemble");
    ens.members.push_back(std::move(member));
  }
  return ens;
}

Ensemble forecast(const Ensemble& ens, int n_steps, double dt, const PdeModel& model) {
  Ensemble out;
  out.members.resize(ens.members.size());
  detail::parallel_for(0, ens.size(), [&](int k) {
    out.members[k] = advance(ens.members[k], n_steps, dt, model);
  });
  return out;
}

Field2D ensemble_mean(const Ensemble& ens) {
  if (ens.members.empty()) throw std::invalid_argument("ensemble_mean: empty ensemble");
  Field2D mean(ens.grid(), 0.0);
  for (const Field2D& member : ens.members) {
    if (member.grid() != ens.grid()) {
      throw std::invalid_argument("ensemble_mean: members on different grids");
    }
    for (int m = 0; m < mean.size(); ++m) mean.data()[m] += member.data()[m];
  }
  const double inv_k = 1.0 / ens.size();
  for (double& v : mean.values()) v *= inv_k;
  return mean;
}

CenteredEnsemble center(const Ensemble& ens) {
  if (ens.size() < 2) throw std::invalid_argument("center: ensemble size must be >= 2");
  CenteredEnsemble ce;
  ce.mean = ensemble_mean(ens);
  const int n = ce.mean.size();
  const int k_count = ens.size();
  ce.deviations.resize(n, k_count);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k_count - 1));
  for (int k = 0; k < k_count; ++k) {
    const double* member = ens.members[k].data();
    const double* mean = ce.mean.data();
    double* col = ce.deviations.col(k).data();
    for (int m = 0; m < n; ++m) col[m] = (member[m] - mean[m]) * scale;
  }
  return ce;
}

CenteredEnsemble inflate(CenteredEnsemble ce, double alpha) {
  if (alpha < 1.0) throw std::invalid_argument("inflate: alpha must be >= 1");
  ce.deviations *= alpha;
  return ce;
}

namespace {

void put_u64_le(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw std::runtime_error("ensemble checkpoint: truncated header");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
  return v;
}

}  // namespace

void write_ensemble_checkpoint(const Ensemble& ens, std::ostream& out) {
  put_u64_le(out, static_cast<std::uint64_t>(ens.size()));
  put_u64_le(out, static_cast<std::uint64_t>(ens.grid().nx));
  put_u64_le(out, static_cast<std::uint64_t>(ens.grid().ny));
  for (const Field2D& member : ens.members) write_field_binary(member, out);
}

Ensemble read_ensemble_checkpoint(std::istream& in, const Grid2D& grid) {
  const auto k_count = get_u64_le(in);
  const auto nx = get_u64_le(in);
  const auto ny = get_u64_le(in);
  if (nx != static_cast<std::uint64_t>(grid.nx) || ny != static_cast<std::uint64_t>(grid.ny)) {
    throw std::runtime_error("ensemble checkpoint: header dims do not match grid");
  }
  if (k_count < 2) throw std::runtime_error("ensemble checkpoint: K must be >= 2");
  Ensemble ens;
  ens.members.reserve(k_count);
  for (std::uint64_t k = 0; k < k_count; ++k) {
    ens.members.push_back(read_field_binary(in, grid));
  }
  return ens;
}

}  // namespace sida
