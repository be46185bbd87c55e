/*
 * (C) Copyright 2026 sida authors
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "sida/grid.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "sida/format.hpp"

namespace sida {

Grid2D Grid2D::uniform(double x_min, double x_max, double y_min, double y_max,
                       int nx, int ny) {
  if (nx < 3 || ny < 3) {
    throw std::invalid_argument("Grid2D: nx and ny must be >= 3");
  }
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw std::invalid_argument("Grid2D: domain bounds must be increasing");
  }
  Grid2D g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.y_min = y_min;
  g.y_max = y_max;
  g.nx = nx;
  g.ny = ny;
  g.dx = (x_max - x_min) / (nx - 1);
  g.dy = (y_max - y_min) / (ny - 1);
  return g;
}

void Field2D::ensure_finite(const char* context) const {
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(context) + ": field contains a non-finite value");
    }
  }
}

int flatten(int i, int j, const Grid2D& grid) {
  if (i < 1 || i > grid.nx || j < 1 || j > grid.ny) {
    throw std::out_of_range("flatten: index (" + std::to_string(i) + "," +
                            std::to_string(j) + ") outside grid");
  }
  return i + (j - 1) * grid.nx;
}

std::pair<int, int> unflatten(int m, const Grid2D& grid) {
  if (m < 1 || m > grid.size()) {
    throw std::out_of_range("unflatten: index " + std::to_string(m) + " outside grid");
  }
  const int j = (m - 1) / grid.nx + 1;
  const int i = m - (j - 1) * grid.nx;
  return {i, j};
}

std::vector<double> flatten_field(const Field2D& f) {
  return std::vector<double>(f.data(), f.data() + f.size());
}

Field2D unflatten_field(std::span<const double> flat, const Grid2D& grid) {
  if (static_cast<int>(flat.size()) != grid.size()) {
    throw std::invalid_argument("unflatten_field: size mismatch");
  }
  Field2D f(grid);
  std::memcpy(f.data(), flat.data(), flat.size() * sizeof(double));
  return f;
}

Field2D central_diff(const Field2D& f, Direction direction) {
  const Grid2D& g = f.grid();
  Field2D out(g);
  if (direction == Direction::X) {
    const double inv = 1.0 / (2.0 * g.dx);
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const int ip = (i + 1 == g.nx) ? 0 : i + 1;
        const int im = (i == 0) ? g.nx - 1 : i - 1;
        out(i, j) = (f(ip, j) - f(im, j)) * inv;
      }
    }
  } else {
    const double inv = 1.0 / (2.0 * g.dy);
    for (int j = 0; j < g.ny; ++j) {
      const int jp = (j + 1 == g.ny) ? 0 : j + 1;
      const int jm = (j == 0) ? g.ny - 1 : j - 1;
      for (int i = 0; i < g.nx; ++i) {
        out(i, j) = (f(i, jp) - f(i, jm)) * inv;
      }
    }
  }
  return out;
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
  if (!in) throw std::runtime_error("field binary: truncated header");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
  return v;
}

static_assert(std::endian::native == std::endian::little,
              "field binary IO assumes a little-endian host for the f64 payload");

}  // namespace

void write_field_binary(const Field2D& f, std::ostream& out) {
  put_u64_le(out, static_cast<std::uint64_t>(f.nx()));
  put_u64_le(out, static_cast<std::uint64_t>(f.ny()));
  out.write(reinterpret_cast<const char*>(f.data()),
            static_cast<std::streamsize>(f.size()) * 8);
  if (!out) throw std::runtime_error("field binary: write failed");
}

Field2D read_field_binary(std::istream& in, const Grid2D& grid) {
  const auto nx = get_u64_le(in);
  const auto ny = get_u64_le(in);
  if (nx != static_cast<std::uint64_t>(grid.nx) || ny != static_cast<std::uint64_t>(grid.ny)) {
    throw std::runtime_error("field binary: header dims do not match grid");
  }
  Field2D f(grid);
  in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size()) * 8);
  if (!in) throw std::runtime_error("field binary: truncated payload");
  f.ensure_finite("read_field_binary");
  return f;
}

void write_field_csv(const Field2D& f, std::ostream& out) {
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      if (i > 0) out << ',';
      out << format_double(f(i, j));
    }
    out << '\n';
  }
}

}  // namespace sida
