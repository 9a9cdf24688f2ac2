#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "subflow/errors.hpp"

namespace subflow {

/// Structured tensor grid on (0,Lx) or (0,Lx)x(0,Ly).
///
/// Only interior nodes are unknowns; the Dirichlet boundary is an implicit
/// ghost layer of zeros. Node (i,j) has coordinates ((i+1)hx, (j+1)hy) and
/// linear index j*nx + i.
class Mesh {
 public:
  static Mesh interval(double length, int n) {
    check_extent(length, "L");
    check_count(n, "n");
    return Mesh(1, length, 1.0, n, 1);
  }

  static Mesh rectangle(double lx, double ly, int nx, int ny) {
    check_extent(lx, "Lx");
    check_extent(ly, "Ly");
    check_count(nx, "nx");
    check_count(ny, "ny");
    return Mesh(2, lx, ly, nx, ny);
  }

  int dim() const noexcept { return dim_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return lx_ / (nx_ + 1); }
  double hy() const noexcept { return dim_ == 1 ? 1.0 : ly_ / (ny_ + 1); }

  /// Weight of one interior node in discrete integrals.
  double cell_measure() const noexcept { return dim_ == 1 ? hx() : hx() * hy(); }

  /// |Omega|.
  double measure() const noexcept { return dim_ == 1 ? lx_ : lx_ * ly_; }

  std::size_t index(int i, int j = 0) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }
  int ix(std::size_t k) const noexcept { return static_cast<int>(k % static_cast<std::size_t>(nx_)); }
  int iy(std::size_t k) const noexcept { return static_cast<int>(k / static_cast<std::size_t>(nx_)); }

  double x(std::size_t k) const noexcept { return (ix(k) + 1) * hx(); }
  double y(std::size_t k) const noexcept { return dim_ == 1 ? 0.0 : (iy(k) + 1) * hy(); }
  std::array<double, 2> coord(std::size_t k) const noexcept { return {x(k), y(k)}; }

  /// Euclidean distance from node k to the boundary.
  double distance_to_boundary(std::size_t k) const noexcept {
    const double xk = x(k);
    double d = std::min(xk, lx_ - xk);
    if (dim_ == 2) {
      const double yk = y(k);
      d = std::min(d, std::min(yk, ly_ - yk));
    }
    return d;
  }

  friend bool operator==(const Mesh& a, const Mesh& b) noexcept {
    return a.dim_ == b.dim_ && a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.lx_ == b.lx_ && a.ly_ == b.ly_;
  }

  std::string describe() const {
    if (dim_ == 1) return "interval(L=" + std::to_string(lx_) + ", n=" + std::to_string(nx_) + ")";
    return "rectangle(" + std::to_string(lx_) + "x" + std::to_string(ly_) + ", " + std::to_string(nx_) + "x" +
           std::to_string(ny_) + ")";
  }

 private:
  Mesh(int dim, double lx, double ly, int nx, int ny) : dim_(dim), nx_(nx), ny_(ny), lx_(lx), ly_(ly) {}

  static void check_extent(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(std::string("mesh extent ") + name + " must be a positive finite number, got " +
                            std::to_string(v));
  }
  static void check_count(int v, const char* name) {
    if (v < 1) throw ValidationError(std::string("mesh count ") + name + " must be >= 1, got " + std::to_string(v));
  }

  int dim_;
  int nx_;
  int ny_;
  double lx_;
  double ly_;
};

}  // namespace subflow
