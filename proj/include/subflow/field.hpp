#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "subflow/errors.hpp"
#include "subflow/mesh.hpp"

namespace subflow {

/// Nodal real values on the interior nodes of a mesh.
///
/// A Field plays every role in the solver: u, v = w^(1/q), w = u^q, the
/// datum h and coefficient profiles. Values are finite at construction.
class Field {
 public:
  explicit Field(Mesh mesh, double fill = 0.0) : mesh_(std::move(mesh)), values_(mesh_.size(), fill) {
    require_finite();
  }

  Field(Mesh mesh, std::vector<double> values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (values_.size() != mesh_.size())
      throw ValidationError("field has " + std::to_string(values_.size()) + " values but mesh has " +
                            std::to_string(mesh_.size()) + " nodes");
    require_finite();
  }

  /// Samples fn(x, y) at every node.
  static Field from_function(const Mesh& mesh, const std::function<double(double, double)>& fn) {
    std::vector<double> vals(mesh.size());
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = fn(mesh.x(k), mesh.y(k));
    return Field(mesh, std::move(vals));
  }

  const Mesh& mesh() const noexcept { return mesh_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }
  bool is_nonnegative() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return x >= 0.0; });
  }

  Field& operator+=(const Field& o) {
    same_mesh(o, "+=");
    for (std::size_t k = 0; k < size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  Field& operator-=(const Field& o) {
    same_mesh(o, "-=");
    for (std::size_t k = 0; k < size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  Field& operator*=(double s) noexcept {
    for (double& x : values_) x *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  friend bool operator==(const Field& a, const Field& b) noexcept {
    return a.mesh_ == b.mesh_ && a.values_ == b.values_;
  }

  void same_mesh(const Field& o, const char* op) const {
    if (!(mesh_ == o.mesh_))
      throw MeshMismatch(std::string("fields on different meshes in ") + op + ": " + mesh_.describe() + " vs " +
                         o.mesh_.describe());
  }

 private:
  void require_finite() const {
    if (!all_finite()) throw ValidationError("field contains non-finite values");
  }

  Mesh mesh_;
  std::vector<double> values_;
};

/// sqrt(sum_j m_j f_j^2) with m_j the cell measure.
inline double l2_norm(const Field& f) {
  double s = 0.0;
  for (double x : f) s += x * x;
  return std::sqrt(f.mesh().cell_measure() * s);
}

inline double sup_norm(const Field& f) {
  double s = 0.0;
  for (double x : f) s = std::max(s, std::abs(x));
  return s;
}

inline double max_value(const Field& f) { return *std::max_element(f.begin(), f.end()); }

inline Field positive_part(Field f) {
  for (double& x : f.values()) x = std::max(x, 0.0);
  return f;
}

inline Field nodal_min(const Field& f, const Field& g) {
  f.same_mesh(g, "nodal_min");
  Field out = f;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::min(f[k], g[k]);
  return out;
}

inline Field nodal_max(const Field& f, const Field& g) {
  f.same_mesh(g, "nodal_max");
  Field out = f;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(f[k], g[k]);
  return out;
}

/// Scalar power with 0^a = 0 for every a > 0.
inline double safe_pow(double x, double a) { return x == 0.0 ? 0.0 : std::pow(x, a); }

/// Nodal f^alpha. Negative bases are allowed only for integer exponents.
inline Field power(Field f, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ValidationError("power exponent must be positive, got " + std::to_string(alpha));
  const bool integral = std::floor(alpha) == alpha;
  for (double& x : f.values()) {
    if (x < 0.0 && !integral)
      throw ValidationError("negative base " + std::to_string(x) + " with fractional exponent " +
                            std::to_string(alpha));
    x = safe_pow(x, alpha);
  }
  return f;
}

/// Exact Euclidean distance of every node to the boundary.
inline Field boundary_distance(const Mesh& mesh) {
  std::vector<double> d(mesh.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = mesh.distance_to_boundary(k);
  return Field(mesh, std::move(d));
}

}  // namespace subflow
