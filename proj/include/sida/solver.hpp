/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <string>

#include "sida/grid.hpp"

namespace sida {

/// Hyperbolic model u_t + f(u)_x + g(u)_y = 0 on the periodic grid.
struct PdeModel {
  enum class Kind { LinearAdvection, Burgers };

  Kind kind = Kind::LinearAdvection;
  double ax = 0.0;  // LinearAdvection: f(u) = ax*u
  double ay = 0.0;  // LinearAdvection: g(u) = ay*u

  static PdeModel linear_advection(double ax, double ay) {
    return PdeModel{Kind::LinearAdvection, ax, ay};
  }
  static PdeModel burgers() { return PdeModel{Kind::Burgers, 0.0, 0.0}; }

  double flux_x(double u) const {
    return kind == Kind::LinearAdvection ? ax * u : 0.5 * u * u;
  }
  double flux_y(double u) const {
    return kind == Kind::LinearAdvection ? ay * u : 0.5 * u * u;
  }
};

struct TimeStepper {
  double dt = 0.0;
  double cfl_number = 0.0;

  static TimeStepper fixed(double dt) { return TimeStepper{dt, 0.0}; }
  /// dt = cfl / (1/dx + 1/dy).
  static TimeStepper from_cfl(double cfl, const Grid2D& grid) {
    return TimeStepper{cfl / (1.0 / grid.dx + 1.0 / grid.dy), cfl};
  }
};

/// Semidiscrete right-hand side -(f(u)_x + g(u)_y), fifth-order finite
/// difference WENO reconstruction with global Lax-Friedrichs flux splitting
/// (Jiang-Shu smoothness indicators, eps = 1e-6, linear weights 1/10, 3/5,
/// 3/10). The splitting speed is the field-wide max of |f'(u)| per direction,
/// recomputed on every evaluation.
///
/// Periodic convention: the endpoint-inclusive grid samples a periodic domain,
/// so the last grid line in each direction is the image of the first; stencils
/// wrap with period n-1 and the duplicated line mirrors the interior result.
Field2D weno5_rhs(const Field2D& u, const PdeModel& model);

/// One TVD-RK3 step:
///   u1 = u + dt L(u)
///   u2 = 3/4 u + 1/4 (u1 + dt L(u1))
///   u' = 1/3 u + 2/3 (u2 + dt L(u2))
Field2D tvdrk3_step(const Field2D& u, double dt, const PdeModel& model);

/// n_steps repeated tvdrk3_step applications; advance(u, 0) == u.
Field2D advance(const Field2D& u, int n_steps, double dt, const PdeModel& model);

/// Piecewise initial data evaluated pointwise; name is "advection_box" or
/// "burgers_box". Region membership uses closed intervals and the
/// earlier-listed case wins at shared boundaries.
double initial_condition_value(const std::string& name, double x, double y);
Field2D initial_condition(const std::string& name, const Grid2D& grid);

}  // namespace sida
