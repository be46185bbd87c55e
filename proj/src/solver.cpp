/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "parallel_for.hpp"

namespace sida {

namespace {

constexpr double kWenoEps = 1e-6;

inline double sq(double v) { return v * v; }

// Left-biased WENO5 value at the i+1/2 face from the five cell values
// v0..v4 = q[i-2..i+2].
inline double weno5_face(double v0, double v1, double v2, double v3, double v4) {
  const double b0 = (13.0 / 12.0) * sq(v0 - 2.0 * v1 + v2) + 0.25 * sq(v0 - 4.0 * v1 + 3.0 * v2);
  const double b1 = (13.0 / 12.0) * sq(v1 - 2.0 * v2 + v3) + 0.25 * sq(v1 - v3);
  const double b2 = (13.0 / 12.0) * sq(v2 - 2.0 * v3 + v4) + 0.25 * sq(3.0 * v2 - 4.0 * v3 + v4);
  const double a0 = 0.1 / sq(kWenoEps + b0);
  const double a1 = 0.6 / sq(kWenoEps + b1);
  const double a2 = 0.3 / sq(kWenoEps + b2);
  const double p0 = (2.0 * v0 - 7.0 * v1 + 11.0 * v2) * (1.0 / 6.0);
  const double p1 = (-v1 + 5.0 * v2 + 2.0 * v3) * (1.0 / 6.0);
  const double p2 = (2.0 * v2 + 5.0 * v3 - v4) * (1.0 / 6.0);
  return (a0 * p0 + a1 * p1 + a2 * p2) / (a0 + a1 + a2);
}

// Flux derivative along one periodic line of length n. The line values are
// read through `load`, the per-point contribution -dF/dh is added via `store`.
// Scratch buffers are caller-provided so the sweep does not allocate.
struct LineBuffers {
  std::vector<double> fp, fm, fhat;
  void resize(int n) {
    fp.resize(n + 6);
    fm.resize(n + 6);
    fhat.resize(n);
  }
};

template <typename Load, typename Store, typename Flux>
void line_flux_derivative(int n, double h, double lambda, Load load, Flux flux,
                          Store store, LineBuffers& buf) {
  // Padded splitting arrays: index k corresponds to line point k-3 (periodic).
  double* fp = buf.fp.data();
  double* fm = buf.fm.data();
  for (int k = 0; k < n + 6; ++k) {
    const int idx = ((k - 3) % n + n) % n;
    const double u = load(idx);
    const double f = flux(u);
    fp[k] = 0.5 * (f + lambda * u);
    fm[k] = 0.5 * (f - lambda * u);
  }
  // fhat[i] approximates the flux at the i+1/2 face.
  double* fhat = buf.fhat.data();
  for (int i = 0; i < n; ++i) {
    const int c = i + 3;  // padded index of point i
    const double plus = weno5_face(fp[c - 2], fp[c - 1], fp[c], fp[c + 1], fp[c + 2]);
    const double minus = weno5_face(fm[c + 3], fm[c + 2], fm[c + 1], fm[c], fm[c - 1]);
    fhat[i] = plus + minus;
  }
  const double inv_h = 1.0 / h;
  for (int i = 0; i < n; ++i) {
    const double left = fhat[(i == 0) ? n - 1 : i - 1];
    store(i, -(fhat[i] - left) * inv_h);
  }
}

// Field-wide max |f'(u)| for the given direction, fixed serial reduction order.
double splitting_speed(const Field2D& u, const PdeModel& model, Direction dir) {
  if (model.kind == PdeModel::Kind::LinearAdvection) {
    return std::abs(dir == Direction::X ? model.ax : model.ay);
  }
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

Field2D weno5_rhs(const Field2D& u, const PdeModel& model) {
  const Grid2D& g = u.grid();
  Field2D rhs(g, 0.0);
  const double lx = splitting_speed(u, model, Direction::X);
  const double ly = splitting_speed(u, model, Direction::Y);

  // The endpoint-inclusive grid samples a periodic domain, so the last grid
  // line is the periodic image of the first: stencils wrap with period n-1
  // and the duplicated line mirrors the result.
  const int px = g.nx - 1;
  const int py = g.ny - 1;

  // Line sweeps are independent; parallelize them only when the grid is large
  // enough for the thread launch to pay off.
  const bool par = g.size() >= 32768;

  {  // x-direction: one line per j, contiguous in memory.
    auto sweep = [&](int j) {
      thread_local LineBuffers buf;
      buf.resize(px);
      const double* col = u.data() + static_cast<std::size_t>(j) * g.nx;
      double* out = rhs.data() + static_cast<std::size_t>(j) * g.nx;
      line_flux_derivative(
          px, g.dx, lx, [col](int i) { return col[i]; },
          [&model](double v) { return model.flux_x(v); },
          [out](int i, double v) { out[i] += v; }, buf);
    };
    if (par) {
      detail::parallel_for(0, py, sweep);
    } else {
      for (int j = 0; j < py; ++j) sweep(j);
    }
  }

  {  // y-direction: one line per i, stride nx.
    auto sweep = [&](int i) {
      thread_local LineBuffers buf;
      buf.resize(py);
      const double* base = u.data() + i;
      double* out = rhs.data() + i;
      const std::size_t stride = static_cast<std::size_t>(g.nx);
      line_flux_derivative(
          py, g.dy, ly, [base, stride](int j) { return base[j * stride]; },
          [&model](double v) { return model.flux_y(v); },
          [out, stride](int j, double v) { out[j * stride] += v; }, buf);
    };
    if (par) {
      detail::parallel_for(0, px, sweep);
    } else {
      for (int i = 0; i < px; ++i) sweep(i);
    }
  }

  // Mirror the duplicated periodic line in each direction.
  for (int j = 0; j < py; ++j) rhs(px, j) = rhs(0, j);
  for (int i = 0; i < g.nx; ++i) rhs(i, py) = rhs(i, 0);
  return rhs;
}

Field2D tvdrk3_step(const Field2D& u, double dt, const PdeModel& model) {
  if (!(dt > 0.0)) throw std::invalid_argument("tvdrk3_step: dt must be positive");
  const int n = u.size();

  Field2D u1 = weno5_rhs(u, model);
  for (int m = 0; m < n; ++m) u1.data()[m] = u.data()[m] + dt * u1.data()[m];

  Field2D u2 = weno5_rhs(u1, model);
  for (int m = 0; m < n; ++m) {
    u2.data()[m] = 0.75 * u.data()[m] + 0.25 * (u1.data()[m] + dt * u2.data()[m]);
  }

  Field2D out = weno5_rhs(u2, model);
  for (int m = 0; m < n; ++m) {
    out.data()[m] = (1.0 / 3.0) * u.data()[m] + (2.0 / 3.0) * (u2.data()[m] + dt * out.data()[m]);
  }
  out.ensure_finite("tvdrk3_step");
  return out;
}

Field2D advance(const Field2D& u, int n_steps, double dt, const PdeModel& model) {
  if (n_steps < 0) throw std::invalid_argument("advance: n_steps must be >= 0");
  Field2D state = u;
  for (int s = 0; s < n_steps; ++s) state = tvdrk3_step(state, dt, model);
  return state;
}

double initial_condition_value(const std::string& name, double x, double y) {
  if (name == "advection_box") {
    if (x >= 0.4 && x <= 0.6) {
      if (y >= 0.3 && y <= 0.4) return 2.0 * y + 0.4;
      if (y >= 0.4 && y <= 0.6) return 1.2;
      if (y >= 0.6 && y <= 0.8) return -y + 1.8;
    }
    return 1.0;
  }
  if (name == "burgers_box") {
    if (x >= 0.4 && x <= 0.6 && y >= 0.4 && y <= 0.6) return 1.2;
    return 1.0;
  }
  throw std::invalid_argument("initial_condition: unknown name '" + name + "'");
}

Field2D initial_condition(const std::string& name, const Grid2D& grid) {
  Field2D f(grid);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      f(i, j) = initial_condition_value(name, grid.x(i), grid.y(j));
    }
  }
  return f;
}

}  // namespace sida
