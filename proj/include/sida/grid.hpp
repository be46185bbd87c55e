/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace sida {

/// Uniform periodic 2D grid on [x_min,x_max] x [y_min,y_max] with nx x ny points,
/// dx = (x_max-x_min)/(nx-1) and dy analogously.
struct Grid2D {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;

  /// Requires nx >= 3 and ny >= 3 (central differences need both neighbors).
  static Grid2D uniform(double x_min, double x_max, double y_min, double y_max,
                        int nx, int ny);

  double x(int i) const { return x_min + i * dx; }  // 0-based
  double y(int j) const { return y_min + j * dy; }
  int size() const { return nx * ny; }

  bool operator==(const Grid2D&) const = default;
};

/// One scalar state on the grid. Storage is contiguous in flatten order:
/// values[i + j*nx], i fastest, which is exactly the column-major stacking
/// m = i + (j-1)*nx used by all serialized output (1-based in the formulas,
/// 0-based here).
class Field2D {
 public:
  Field2D() = default;
  explicit Field2D(const Grid2D& grid, double fill = 0.0)
      : grid_(grid), values_(static_cast<std::size_t>(grid.size()), fill) {}

  const Grid2D& grid() const { return grid_; }
  int nx() const { return grid_.nx; }
  int ny() const { return grid_.ny; }
  int size() const { return grid_.size(); }

  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * grid_.nx]; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * grid_.nx]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Throws if any entry is NaN or infinite; context names the failing operation.
  void ensure_finite(const char* context) const;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

enum class Direction { X, Y };

/// 1-based (i, j) -> 1-based linear index m = i + (j-1)*nx. Throws on out-of-range.
int flatten(int i, int j, const Grid2D& grid);

/// Inverse of flatten: 1-based m -> 1-based (i, j).
std::pair<int, int> unflatten(int m, const Grid2D& grid);

/// Column-major stacking of the field values; component m-1 is f(i,j) under flatten.
std::vector<double> flatten_field(const Field2D& f);

/// Exact inverse of flatten_field.
Field2D unflatten_field(std::span<const double> flat, const Grid2D& grid);

/// Second-order central difference with periodic wraparound at the boundaries.
Field2D central_diff(const Field2D& f, Direction direction);

/// Binary format: header of two little-endian u64 (nx, ny), then nx*ny
/// little-endian f64 in flatten order.
void write_field_binary(const Field2D& f, std::ostream& out);
Field2D read_field_binary(std::istream& in, const Grid2D& grid);

/// Debug CSV: ny rows of nx comma-separated values (row j holds i = 1..nx).
void write_field_csv(const Field2D& f, std::ostream& out);

}  // namespace sida
