#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "subflow/errors.hpp"
#include "subflow/field.hpp"
#include "subflow/plap.hpp"
#include "subflow/reaction.hpp"

namespace subflow {

/// J_{0,q}(w) = q * p_energy(w^(1/q)) on the cone w >= 0, +infinity elsewhere.
inline double j0q(const Field& w, double p, double q) {
  if (!w.is_nonnegative()) return std::numeric_limits<double>::infinity();
  return q * p_energy(power(w, 1.0 / q), PExponent(p));
}

/// The per-step resolvent objective
///
///   Phi(v) = 1/2 sum m (v^q - g)^2 + mu q E_p(v) - mu q sum m F1(x, v),
///
/// whose minimizer over v >= 0 gives w = v^q solving
/// w + mu dJ_{0,q}(w) - mu f1(x,v)/v^(q-1) = g.
struct StepObjective {
  StepObjective(Field datum, double p_, double q_, double mu_, ReactionSpec reaction_ = ReactionSpec::none())
      : g(std::move(datum)), p(p_), q(q_), mu(mu_), reaction(std::move(reaction_)) {
    (void)PExponent(p);
    if (!(q > 1.0 && q <= p)) throw ValidationError("q must satisfy 1 < q <= p, got q=" + std::to_string(q));
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("mu must be positive, got " + std::to_string(mu));
    if (reaction.has_f1() && !(reaction.f1_terms.front().coeff.mesh() == g.mesh()))
      throw MeshMismatch("reaction coefficients and datum live on different meshes");
    validate(reaction, q);
  }

  const Mesh& mesh() const noexcept { return g.mesh(); }

  Field g;
  double p;
  double q;
  double mu;
  ReactionSpec reaction;
};

namespace detail {

inline void require_nonnegative(std::span<const double> v, const char* what) {
  for (double x : v)
    if (x < 0.0) throw ValidationError(std::string(what) + ": negative nodal value " + std::to_string(x));
}

inline double objective_value(std::span<const double> v, const StepObjective& obj) {
  const Mesh& mesh = obj.mesh();
  const double m = mesh.cell_measure();
  double misfit = 0.0;
  double reaction = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double r = safe_pow(v[k], obj.q) - obj.g[k];
    misfit += r * r;
    if (obj.reaction.has_f1()) reaction += f1_potential(obj.reaction, k, v[k]);
  }
  return 0.5 * m * misfit + obj.mu * obj.q * p_energy(v, mesh, obj.p) - obj.mu * obj.q * m * reaction;
}

inline void objective_gradient(std::span<const double> v, const StepObjective& obj, std::span<double> grad) {
  const Mesh& mesh = obj.mesh();
  const double m = mesh.cell_measure();
  const double p = obj.p;
  const double q = obj.q;
  const double mu = obj.mu;
  for (std::size_t k = 0; k < v.size(); ++k) {
    double gk = m * q * safe_pow(v[k], q - 1.0) * (safe_pow(v[k], q) - obj.g[k]);
    if (obj.reaction.has_f1()) gk -= mu * q * m * f1_value(obj.reaction, k, v[k]);
    grad[k] = gk;
  }
  for_each_edge(mesh, [&](const Edge& e) {
    const double flux = p_flux(edge_difference(v, e), p);
    if (flux == 0.0) return;
    const double c = mu * q * m * flux / e.h;
    if (e.b >= 0) grad[static_cast<std::size_t>(e.b)] += c;
    if (e.a >= 0) grad[static_cast<std::size_t>(e.a)] -= c;
  });
}

}  // namespace detail

/// A(w) = -Delta_p(w^(1/q)) / w^((q-1)/q), the single-valued part of dJ_{0,q}
/// at w > 0. Homogeneous of degree (p-q)/q.
inline Field j0q_operator(const Field& w, double p, double q) {
  for (double x : w)
    if (!(x > 0.0)) throw ValidationError("j0q_operator needs w > 0 at every node");
  const Field v = power(w, 1.0 / q);
  Field a = apply_p_laplacian(v, PExponent(p));
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = -a[k] / std::pow(v[k], q - 1.0);
  return a;
}

inline double objective_value(const Field& v, const StepObjective& obj) {
  v.same_mesh(obj.g, "objective_value");
  detail::require_nonnegative(v.values(), "objective_value");
  return detail::objective_value(v.values(), obj);
}

inline Field objective_gradient(const Field& v, const StepObjective& obj) {
  v.same_mesh(obj.g, "objective_gradient");
  detail::require_nonnegative(v.values(), "objective_gradient");
  Field grad(v.mesh());
  detail::objective_gradient(v.values(), obj, grad.values());
  return grad;
}

/// lambda J(w1) + (1-lambda) J(w2) - J(lambda w1 + (1-lambda) w2).
inline double convexity_gap(const Field& w1, const Field& w2, double lambda, double p, double q) {
  w1.same_mesh(w2, "convexity_gap");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ValidationError("convexity weight must lie in (0,1)");
  if (!w1.is_nonnegative() || !w2.is_nonnegative()) throw ValidationError("convexity_gap needs w1, w2 >= 0");
  const Field mid = lambda * w1 + (1.0 - lambda) * w2;
  return lambda * j0q(w1, p, q) + (1.0 - lambda) * j0q(w2, p, q) - j0q(mid, p, q);
}

/// Global discrete generalized Picone gap
///
///   q E_p(z) + (p-q) E_p(u) - sum_e m |D_e u|^(p-2) D_e u * D_e(z^q / u^(q-1)),
///
/// with the quotient z^q/u^(q-1) extended by zero on the ghost layer.
inline double picone_gap(const Field& u, const Field& z, double p, double q) {
  u.same_mesh(z, "picone_gap");
  for (double x : u)
    if (!(x > 0.0)) throw ValidationError("picone_gap needs u > 0 at every node");
  if (!z.is_nonnegative()) throw ValidationError("picone_gap needs z >= 0");
  const Mesh& mesh = u.mesh();
  Field quotient(mesh);
  for (std::size_t k = 0; k < quotient.size(); ++k) quotient[k] = safe_pow(z[k], q) / std::pow(u[k], q - 1.0);
  const double m = mesh.cell_measure();
  double pairing = 0.0;
  for_each_edge(mesh, [&](const Edge& e) {
    pairing += m * p_flux(detail::edge_difference(u.values(), e), p) * detail::edge_difference(quotient.values(), e);
  });
  const PExponent pe(p);
  return q * p_energy(z, pe) + (p - q) * p_energy(u, pe) - pairing;
}

}  // namespace subflow
