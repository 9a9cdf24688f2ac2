#pragma once

// Reaction f(x,u) = f1(x,u) + f2(x,u).
//
// f1 is a finite sum of power terms c(x) u^(s-1). It is treated implicitly
// and must keep f1(x,u)/u^(q-1) = sum c(x) u^(s-q) nonincreasing in u, with a
// finite limit a0(x) as u -> 0. f2 is given through its ratio
// f2(x,u)/u^(q-1), one of a small catalog of globally Lipschitz functions,
// and is treated explicitly.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "subflow/errors.hpp"
#include "subflow/field.hpp"

namespace subflow {

struct PowerTerm {
  Field coeff;  // c(x)
  double s;     // f1 contribution c(x) u^(s-1)
};

enum class F2Kind { none, constant_ratio, sin_ratio, tanh_ratio };

inline F2Kind parse_f2_kind(const std::string& name) {
  if (name == "none") return F2Kind::none;
  if (name == "constant_ratio") return F2Kind::constant_ratio;
  if (name == "sin_ratio") return F2Kind::sin_ratio;
  if (name == "tanh_ratio") return F2Kind::tanh_ratio;
  throw AdmissibilityError("unknown f2 kind '" + name + "' (expected none, constant_ratio, sin_ratio, tanh_ratio)");
}

inline const char* to_string(F2Kind k) {
  switch (k) {
    case F2Kind::none: return "none";
    case F2Kind::constant_ratio: return "constant_ratio";
    case F2Kind::sin_ratio: return "sin_ratio";
    case F2Kind::tanh_ratio: return "tanh_ratio";
  }
  return "?";
}

struct ReactionSpec {
  std::vector<PowerTerm> f1_terms;
  F2Kind f2_kind = F2Kind::none;
  double lambda = 0.0;

  static ReactionSpec none() { return {}; }
  bool has_f1() const noexcept { return !f1_terms.empty(); }
  bool is_none() const noexcept { return f1_terms.empty() && f2_kind == F2Kind::none; }
};

/// Catalog Lipschitz constant of the f2 ratio.
inline double lipschitz_constant(const ReactionSpec& spec) {
  switch (spec.f2_kind) {
    case F2Kind::none:
    case F2Kind::constant_ratio: return 0.0;
    case F2Kind::sin_ratio:
    case F2Kind::tanh_ratio: return std::abs(spec.lambda);
  }
  return 0.0;
}

/// Checks the structural assumptions for exponent q and returns K.
inline double validate(const ReactionSpec& spec, double q) {
  if (!std::isfinite(spec.lambda)) throw AdmissibilityError("f2 lambda must be finite");
  for (std::size_t t = 0; t < spec.f1_terms.size(); ++t) {
    const PowerTerm& term = spec.f1_terms[t];
    const std::string tag = "f1 term " + std::to_string(t) + " (s=" + std::to_string(term.s) + ")";
    if (!(term.s > 0.0) || !std::isfinite(term.s)) throw AdmissibilityError(tag + ": exponent s must be positive");
    for (double c : term.coeff) {
      if (c == 0.0) continue;
      if (term.s < q)
        throw AdmissibilityError(tag + ": s < q with nonzero coefficient makes f1/u^(q-1) unbounded at u = 0");
      if (c > 0.0 && term.s > q)
        throw AdmissibilityError(tag + ": positive coefficient with s > q makes f1/u^(q-1) increasing");
    }
    if (t > 0 && !(term.coeff.mesh() == spec.f1_terms[0].coeff.mesh()))
      throw MeshMismatch(tag + ": coefficient lives on a different mesh");
  }
  return lipschitz_constant(spec);
}

/// a0(x) = lim_{r->0} f1(x,r)/r^(q-1): the coefficient of the s = q term.
inline Field a0_field(const ReactionSpec& spec, const Mesh& mesh, double q) {
  Field a0(mesh);
  for (const PowerTerm& term : spec.f1_terms) {
    if (term.s == q) a0 += term.coeff;
  }
  return a0;
}

/// F1(x_k, v) = int_0^v f1(x_k, s) ds = sum c v^s / s.
inline double f1_potential(const ReactionSpec& spec, std::size_t k, double v) {
  double sum = 0.0;
  for (const PowerTerm& term : spec.f1_terms) {
    const double c = term.coeff[k];
    if (c != 0.0) sum += c * safe_pow(v, term.s) / term.s;
  }
  return sum;
}

/// f1(x_k, v) = sum c v^(s-1).
inline double f1_value(const ReactionSpec& spec, std::size_t k, double v) {
  double sum = 0.0;
  for (const PowerTerm& term : spec.f1_terms) {
    const double c = term.coeff[k];
    if (c != 0.0) sum += c * safe_pow(v, term.s - 1.0);
  }
  return sum;
}

/// d f1 / dv at v > 0.
inline double f1_derivative(const ReactionSpec& spec, std::size_t k, double v) {
  double sum = 0.0;
  for (const PowerTerm& term : spec.f1_terms) {
    const double c = term.coeff[k];
    if (c != 0.0 && term.s != 1.0) sum += c * (term.s - 1.0) * std::pow(v, term.s - 2.0);
  }
  return sum;
}

/// f1(x_k,u)/u^(q-1) = sum c u^(s-q), for u > 0.
inline double f1_ratio(const ReactionSpec& spec, std::size_t k, double u, double q) {
  double sum = 0.0;
  for (const PowerTerm& term : spec.f1_terms) {
    const double c = term.coeff[k];
    if (c == 0.0) continue;
    sum += term.s == q ? c : c * std::pow(u, term.s - q);
  }
  return sum;
}

/// f2(x_k,u)/u^(q-1). The catalog ratios do not depend on x.
inline double f2_ratio(const ReactionSpec& spec, std::size_t /*k*/, double u) {
  switch (spec.f2_kind) {
    case F2Kind::none: return 0.0;
    case F2Kind::constant_ratio: return spec.lambda;
    case F2Kind::sin_ratio: return spec.lambda * std::sin(u);
    case F2Kind::tanh_ratio: return spec.lambda * std::tanh(u);
  }
  return 0.0;
}

}  // namespace subflow
