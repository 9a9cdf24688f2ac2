#pragma once

// Named nodal profiles used for initial data, forcing shapes and
// coefficient fields.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "subflow/errors.hpp"
#include "subflow/field.hpp"
#include "subflow/mesh.hpp"

namespace subflow {

/// Uniform double in [0,1) from the top 53 bits of a 64-bit engine.
/// Unlike std::uniform_real_distribution the result is pinned across
/// standard library implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

struct ProfileSpec {
  std::string name = "constant";  // sin, parabola, distance, constant, random, values
  double amplitude = 1.0;
  double offset = 0.0;
  std::vector<double> values;  // only for "values"
  std::uint64_t seed = 0;      // only for "random"

  static ProfileSpec constant(double c) {
    ProfileSpec s;
    s.amplitude = c;
    return s;
  }
  static ProfileSpec named(std::string n, double amp = 1.0, double off = 0.0) {
    ProfileSpec s;
    s.name = std::move(n);
    s.amplitude = amp;
    s.offset = off;
    return s;
  }
};

inline bool is_profile_name(const std::string& n) {
  return n == "sin" || n == "parabola" || n == "distance" || n == "constant" || n == "random" || n == "values";
}

/// offset + amplitude * shape(x). Shapes:
///   sin       prod sin(pi x_i / L_i)
///   parabola  prod 4 x_i (L_i - x_i) / L_i^2
///   distance  distance to the boundary
///   constant  1
///   random    uniform in [-1,1], seeded
///   values    explicit nodal list
inline Field make_profile(const Mesh& mesh, const ProfileSpec& spec) {
  const double pi = std::numbers::pi;
  std::vector<double> out(mesh.size());
  if (spec.name == "values") {
    if (spec.values.size() != mesh.size())
      throw ValidationError("profile 'values' has " + std::to_string(spec.values.size()) + " entries, mesh has " +
                            std::to_string(mesh.size()) + " nodes");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = spec.offset + spec.amplitude * spec.values[k];
    return Field(mesh, std::move(out));
  }
  std::mt19937_64 rng(spec.seed);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double x = mesh.x(k);
    const double y = mesh.y(k);
    double s;
    if (spec.name == "sin") {
      s = std::sin(pi * x / mesh.lx());
      if (mesh.dim() == 2) s *= std::sin(pi * y / mesh.ly());
    } else if (spec.name == "parabola") {
      s = 4.0 * x * (mesh.lx() - x) / (mesh.lx() * mesh.lx());
      if (mesh.dim() == 2) s *= 4.0 * y * (mesh.ly() - y) / (mesh.ly() * mesh.ly());
    } else if (spec.name == "distance") {
      s = mesh.distance_to_boundary(k);
    } else if (spec.name == "constant") {
      s = 1.0;
    } else if (spec.name == "random") {
      s = uniform(rng, -1.0, 1.0);
    } else {
      throw ValidationError("unknown profile '" + spec.name +
                            "' (expected sin, parabola, distance, constant, random, values)");
    }
    // sin(pi) is not exactly zero; keep boundary-adjacent roundoff from going negative
    if ((spec.name == "sin" || spec.name == "parabola") && s < 0.0) s = 0.0;
    out[k] = spec.offset + spec.amplitude * s;
  }
  return Field(mesh, std::move(out));
}

}  // namespace subflow
