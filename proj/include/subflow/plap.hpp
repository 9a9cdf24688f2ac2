#pragma once

// Discrete p-Dirichlet energy on a structured grid.
//
// Each edge e joins two neighbouring nodes (or a node and the zero ghost
// layer) along one axis, with difference quotient D_e = (v_b - v_a) / h_e.
// The energy is (1/p) * sum_e m * |D_e|^p with m the cell measure, i.e. the
// anisotropic edge form in 2D: x-edges and y-edges contribute separately.
// This form keeps the energy submodular under nodal min/max, which the
// isotropic |grad v|^p stencil does not.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "subflow/errors.hpp"
#include "subflow/field.hpp"
#include "subflow/mesh.hpp"

namespace subflow {

/// Diffusion exponent p, 1 < p < infinity.
class PExponent {
 public:
  explicit PExponent(double p) : p_(p) {
    if (!(p > 1.0) || !std::isfinite(p))
      throw ValidationError("p must satisfy 1 < p < inf, got " + std::to_string(p));
  }
  double value() const noexcept { return p_; }
  operator double() const noexcept { return p_; }

 private:
  double p_;
};

/// One edge of the grid. A negative index stands for the zero ghost node.
struct Edge {
  std::ptrdiff_t a;
  std::ptrdiff_t b;
  double h;
};

/// Calls fn(edge) for every x-edge and y-edge, boundary edges included.
template <class Fn>
void for_each_edge(const Mesh& mesh, Fn&& fn) {
  const int nx = mesh.nx();
  const int ny = mesh.ny();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const std::ptrdiff_t a = i == 0 ? -1 : static_cast<std::ptrdiff_t>(mesh.index(i - 1, j));
      const std::ptrdiff_t b = i == nx ? -1 : static_cast<std::ptrdiff_t>(mesh.index(i, j));
      fn(Edge{a, b, mesh.hx()});
    }
  }
  if (mesh.dim() == 2) {
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j <= ny; ++j) {
        const std::ptrdiff_t a = j == 0 ? -1 : static_cast<std::ptrdiff_t>(mesh.index(i, j - 1));
        const std::ptrdiff_t b = j == ny ? -1 : static_cast<std::ptrdiff_t>(mesh.index(i, j));
        fn(Edge{a, b, mesh.hy()});
      }
    }
  }
}

namespace detail {

inline double node_value(std::span<const double> v, std::ptrdiff_t k) {
  return k < 0 ? 0.0 : v[static_cast<std::size_t>(k)];
}

inline double edge_difference(std::span<const double> v, const Edge& e) {
  return (node_value(v, e.b) - node_value(v, e.a)) / e.h;
}

}  // namespace detail

/// |d|^(p-2) d, with the value 0 at d = 0.
inline double p_flux(double d, double p) {
  if (d == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(d), p - 1.0), d);
}

inline double p_energy(std::span<const double> v, const Mesh& mesh, double p) {
  const double m = mesh.cell_measure();
  double sum = 0.0;
  for_each_edge(mesh, [&](const Edge& e) {
    const double d = detail::edge_difference(v, e);
    if (d != 0.0) sum += std::pow(std::abs(d), p);
  });
  return m * sum / p;
}

inline double p_energy(const Field& v, PExponent p) { return p_energy(v.values(), v.mesh(), p); }

/// Exact gradient of p_energy with respect to the nodal values.
inline Field p_energy_gradient(const Field& v, PExponent p) {
  const Mesh& mesh = v.mesh();
  const double m = mesh.cell_measure();
  Field grad(mesh);
  for_each_edge(mesh, [&](const Edge& e) {
    const double flux = p_flux(detail::edge_difference(v.values(), e), p);
    if (flux == 0.0) return;
    const double c = m * flux / e.h;
    if (e.b >= 0) grad[static_cast<std::size_t>(e.b)] += c;
    if (e.a >= 0) grad[static_cast<std::size_t>(e.a)] -= c;
  });
  return grad;
}

/// Nodal Delta_p v with homogeneous Dirichlet data.
inline Field apply_p_laplacian(const Field& v, PExponent p) {
  const Mesh& mesh = v.mesh();
  Field lap(mesh);
  for_each_edge(mesh, [&](const Edge& e) {
    const double flux = p_flux(detail::edge_difference(v.values(), e), p);
    if (flux == 0.0) return;
    const double c = flux / e.h;
    if (e.a >= 0) lap[static_cast<std::size_t>(e.a)] += c;
    if (e.b >= 0) lap[static_cast<std::size_t>(e.b)] -= c;
  });
  return lap;
}

/// Per-edge second derivative of p_energy: m (p-1) |D|^(p-2) / h^2.
///
/// For p < 2 the curvature is unbounded at D = 0; |D| is floored at
/// `d_floor` there. Only used to build search metrics, never to define
/// the energy.
inline double p_edge_curvature(double d, double p, double m, double h, double d_floor) {
  const double ad = std::abs(d);
  double k;
  if (p == 2.0) {
    k = 1.0;
  } else if (p < 2.0) {
    k = std::pow(std::max(ad, d_floor), p - 2.0);
  } else {
    k = ad == 0.0 ? 0.0 : std::pow(ad, p - 2.0);
  }
  return m * (p - 1.0) * k / (h * h);
}

}  // namespace subflow
