#pragma once

// Implicit Euler in the rescaled time tau = q/(2q-1) t for
//
//   d(u^(2q-1))/dt - Delta_p u = f1(x,u) + f2(x,u) + h(t,x) u^(q-1),
//
// written in w = u^q as dw/dtau + dJ_{0,q}(w) - f1/u^(q-1) = h + f2/u^(q-1).
// Each step is one resolvent solve with mu = dtau: f1 sits inside the
// objective, f2 and h are frozen into the datum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "subflow/energy.hpp"
#include "subflow/errors.hpp"
#include "subflow/field.hpp"
#include "subflow/mesh.hpp"
#include "subflow/parallel.hpp"
#include "subflow/reaction.hpp"
#include "subflow/resolvent.hpp"

namespace subflow {

/// h(t,x): zero, a constant, or phi(t) psi(x) with phi piecewise constant.
struct ForcingSpec {
  enum class Kind { zero, constant, separable };

  Kind kind = Kind::zero;
  double c = 0.0;
  std::vector<double> times;   // phi(t) = values[i] on [times[i], times[i+1])
  std::vector<double> values;
  std::optional<Field> shape;  // psi

  static ForcingSpec zero() { return {}; }
  static ForcingSpec constant(double value) {
    ForcingSpec f;
    f.kind = Kind::constant;
    f.c = value;
    return f;
  }
  static ForcingSpec separable(std::vector<double> t, std::vector<double> phi, Field psi) {
    ForcingSpec f;
    f.kind = Kind::separable;
    f.times = std::move(t);
    f.values = std::move(phi);
    f.shape = std::move(psi);
    return f;
  }

  void validate(const Mesh& mesh) const {
    if (kind == Kind::constant && !std::isfinite(c)) throw ValidationError("forcing constant must be finite");
    if (kind != Kind::separable) return;
    if (times.empty() || times.size() != values.size())
      throw ValidationError("separable forcing needs matching, non-empty times and values");
    if (times.front() != 0.0) throw ValidationError("separable forcing samples must start at t = 0");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1])) throw ValidationError("separable forcing times must be strictly increasing");
    for (double v : values)
      if (!std::isfinite(v)) throw ValidationError("separable forcing values must be finite");
    if (!shape) throw ValidationError("separable forcing needs a shape profile");
    if (!(shape->mesh() == mesh)) throw MeshMismatch("forcing shape lives on a different mesh");
  }

  bool is_zero() const noexcept { return kind == Kind::zero || (kind == Kind::constant && c == 0.0); }

  double phi(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return values[i];
  }

  Field at(const Mesh& mesh, double t) const {
    switch (kind) {
      case Kind::zero: return Field(mesh);
      case Kind::constant: return Field(mesh, c);
      case Kind::separable: return phi(t) * *shape;
    }
    return Field(mesh);
  }
};

enum class StepKind { uniform, geometric };

/// Partition of [0, tau_end]: uniform, or geometric with dtau_{k+1} = growth dtau_k.
struct StepPolicy {
  StepKind kind = StepKind::uniform;
  int steps = 100;
  double growth = 1.0;

  static StepPolicy uniform(int n) { return {StepKind::uniform, n, 1.0}; }
  static StepPolicy geometric(int n, double growth) { return {StepKind::geometric, n, growth}; }

  void validate() const {
    if (steps < 1) throw ValidationError("steps must be >= 1");
    if (kind == StepKind::geometric && !(growth > 0.0 && std::isfinite(growth)))
      throw ValidationError("geometric step growth must be positive");
  }

  std::vector<double> grid(double tau_end) const {
    std::vector<double> tau(static_cast<std::size_t>(steps) + 1, 0.0);
    if (kind == StepKind::uniform || growth == 1.0) {
      for (int k = 0; k <= steps; ++k) tau[static_cast<std::size_t>(k)] = tau_end * k / steps;
    } else {
      // dtau_0 (growth^n - 1)/(growth - 1) = tau_end
      const double d0 = tau_end * (growth - 1.0) / (std::pow(growth, steps) - 1.0);
      double d = d0;
      for (int k = 1; k <= steps; ++k) {
        tau[static_cast<std::size_t>(k)] = tau[static_cast<std::size_t>(k) - 1] + d;
        d *= growth;
      }
    }
    tau.back() = tau_end;
    return tau;
  }

  friend bool operator==(const StepPolicy&, const StepPolicy&) = default;
};

inline const char* to_string(StepKind k) { return k == StepKind::uniform ? "uniform" : "geometric"; }

enum class DiffusionClass { fast, borderline, slow };

inline const char* to_string(DiffusionClass c) {
  switch (c) {
    case DiffusionClass::fast: return "fast";
    case DiffusionClass::borderline: return "borderline";
    case DiffusionClass::slow: return "slow";
  }
  return "?";
}

/// (p-1) m against 1 with m = 1/(2q-1).
inline DiffusionClass diffusion_class(double p, double q) {
  const double s = (p - 1.0) / (2.0 * q - 1.0);
  if (s < 1.0) return DiffusionClass::fast;
  if (s > 1.0) return DiffusionClass::slow;
  return DiffusionClass::borderline;
}

struct EvolutionSpec {
  EvolutionSpec(Mesh mesh_, double p_, double q_, Field u0_) : mesh(std::move(mesh_)), p(p_), q(q_), u0(std::move(u0_)) {}

  Mesh mesh;
  double p;
  double q;
  Field u0;
  ForcingSpec forcing;
  ReactionSpec reaction;
  double T = 1.0;
  StepPolicy policy;
  SolverConfig solver;
  double extinction_threshold = 1e-12;

  double m() const noexcept { return 1.0 / (2.0 * q - 1.0); }
  DiffusionClass diffusion() const noexcept { return diffusion_class(p, q); }
  double tau_end() const noexcept { return q / (2.0 * q - 1.0) * T; }
  double t_of_tau(double tau) const noexcept { return (2.0 * q - 1.0) / q * tau; }

  /// Validates everything and returns the f2 Lipschitz constant K.
  double validate() const {
    (void)PExponent(p);
    if (!(q > 1.0 && q <= p)) throw ValidationError("q must satisfy 1 < q <= p, got q=" + std::to_string(q));
    if (!(u0.mesh() == mesh)) throw MeshMismatch("u0 lives on a different mesh");
    if (!u0.is_nonnegative()) throw ValidationError("u0 must be nonnegative");
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("horizon T must be positive");
    if (!(extinction_threshold >= 0.0)) throw ValidationError("extinction threshold must be >= 0");
    policy.validate();
    solver.validate();
    forcing.validate(mesh);
    if (reaction.has_f1() && !(reaction.f1_terms.front().coeff.mesh() == mesh))
      throw MeshMismatch("reaction coefficients live on a different mesh");
    const double K = subflow::validate(reaction, q);
    const std::vector<double> tau = policy.grid(tau_end());
    double dmax = 0.0;
    for (std::size_t k = 1; k < tau.size(); ++k) dmax = std::max(dmax, tau[k] - tau[k - 1]);
    if (dmax * K >= 1.0)
      throw StabilityError("explicit reaction step unstable: dtau*K = " + std::to_string(dmax * K) + " >= 1");
    return K;
  }
};

struct StepRecord {
  int iterations = 0;
  bool converged = false;
  double step_w = 0.0;
  std::string message;
};

struct Trajectory {
  std::vector<double> t;    // physical times
  std::vector<double> tau;  // rescaled times
  std::vector<Field> w;     // w_k = u(t_k)^q
  std::vector<double> l2_w;
  std::vector<double> sup_u;
  std::vector<double> j0q;
  std::vector<StepRecord> steps;  // steps[k] produced w[k+1]
  std::optional<double> extinction_time;
  bool complete = true;
  std::string message;

  std::size_t size() const noexcept { return t.size(); }
};

/// First t_k with sup w_j <= threshold for every j >= k; none otherwise.
inline std::optional<double> detect_extinction(const Trajectory& traj, double threshold = 1e-12) {
  std::optional<double> te;
  for (std::size_t k = traj.size(); k-- > 0;) {
    if (sup_norm(traj.w[k]) > threshold) break;
    te = traj.t[k];
  }
  return te;
}

namespace detail {

inline void record(Trajectory& traj, double tau, double t, Field w, double p, double q) {
  traj.tau.push_back(tau);
  traj.t.push_back(t);
  traj.l2_w.push_back(l2_norm(w));
  traj.sup_u.push_back(std::pow(sup_norm(w), 1.0 / q));
  traj.j0q.push_back(j0q(w, p, q));
  traj.w.push_back(std::move(w));
}

}  // namespace detail

/// The forcing sample used by step k (physical midpoint of the step).
inline Field step_forcing(const EvolutionSpec& spec, const std::vector<double>& tau, std::size_t k) {
  const double tm = 0.5 * (spec.t_of_tau(tau[k]) + spec.t_of_tau(tau[k + 1]));
  return spec.forcing.at(spec.mesh, tm);
}

/// Runs the implicit Euler scheme. A non-converged step truncates the
/// trajectory after that step and clears `complete`.
inline Trajectory evolve(const EvolutionSpec& spec) {
  spec.validate();
  const std::vector<double> tau = spec.policy.grid(spec.tau_end());
  const double q = spec.q;
  const bool explicit_f2 = spec.reaction.f2_kind != F2Kind::none;

  Trajectory traj;
  Field w = power(spec.u0, q);
  Field v = spec.u0;
  detail::record(traj, 0.0, 0.0, w, spec.p, q);

  for (std::size_t k = 0; k + 1 < tau.size(); ++k) {
    const double dtau = tau[k + 1] - tau[k];
    Field g = w;
    if (!spec.forcing.is_zero()) g += dtau * step_forcing(spec, tau, k);
    if (explicit_f2) {
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += dtau * f2_ratio(spec.reaction, j, v[j]);
    }
    const StepObjective obj(std::move(g), spec.p, q, dtau, spec.reaction);
    ResolventResult r = solve_resolvent(obj, v, spec.solver);
    traj.steps.push_back({r.diagnostics.iterations, r.diagnostics.converged, r.diagnostics.step_w,
                          r.diagnostics.message});
    v = std::move(r.v);
    w = std::move(r.w);
    detail::record(traj, tau[k + 1], k + 2 == tau.size() ? spec.T : spec.t_of_tau(tau[k + 1]), w, spec.p, q);
    if (!r.diagnostics.converged) {
      traj.complete = false;
      traj.message = "step " + std::to_string(k) + " did not converge: " + r.diagnostics.message;
      break;
    }
  }
  traj.extinction_time = detect_extinction(traj, spec.extinction_threshold);
  return traj;
}

struct ComparisonReport {
  std::vector<double> t;
  std::vector<double> lhs;    // |(wA - wB)+|
  std::vector<double> bound;  // e^{Kt}|(wA0 - wB0)+| + sum e^{K(t-ts)} |(hA - hB)+| dt
  std::vector<double> defect;
  double max_defect = 0.0;
  double scale = 1.0;
  double tolerance = 0.0;  // absolute, already scaled
  double K = 0.0;
  bool ordered = true;  // wA >= wB nodally at every step (only meaningful for ordered data)
  bool pass = false;
  std::string message;
};

namespace detail {

inline bool same_reaction(const ReactionSpec& a, const ReactionSpec& b) {
  if (a.f2_kind != b.f2_kind || a.lambda != b.lambda || a.f1_terms.size() != b.f1_terms.size()) return false;
  for (std::size_t i = 0; i < a.f1_terms.size(); ++i)
    if (a.f1_terms[i].s != b.f1_terms[i].s || !(a.f1_terms[i].coeff == b.f1_terms[i].coeff)) return false;
  return true;
}

}  // namespace detail

/// Runs both trajectories and evaluates the monotone dependence defect at
/// every step. tol_rel is relative to max(1, max_k bound_k).
inline ComparisonReport comparison_pair(const EvolutionSpec& a, const EvolutionSpec& b, double tol_rel = 1e-3) {
  if (!(a.mesh == b.mesh) || a.p != b.p || a.q != b.q || a.T != b.T || !(a.policy == b.policy))
    throw ValidationError("comparison_pair: specs must share mesh, p, q, horizon and step grid");
  if (!detail::same_reaction(a.reaction, b.reaction))
    throw ValidationError("comparison_pair: specs must share the reaction");
  const double K = a.validate();
  b.validate();

  std::vector<Trajectory> runs(2);
  parallel_for(2, [&](std::size_t i) { runs[i] = evolve(i == 0 ? a : b); });
  const Trajectory& ta = runs[0];
  const Trajectory& tb = runs[1];

  ComparisonReport rep;
  rep.K = K;
  if (!ta.complete || !tb.complete) {
    rep.message = !ta.complete ? ta.message : tb.message;
    return rep;
  }
  const std::vector<double> tau = a.policy.grid(a.tau_end());
  const double d0 = l2_norm(positive_part(ta.w[0] - tb.w[0]));
  std::vector<double> dh(tau.size() - 1);
  for (std::size_t s = 0; s + 1 < tau.size(); ++s)
    dh[s] = l2_norm(positive_part(step_forcing(a, tau, s) - step_forcing(b, tau, s)));

  double maxbound = 0.0;
  for (std::size_t k = 0; k < ta.size(); ++k) {
    const double tk = ta.t[k];
    double bnd = std::exp(K * tk) * d0;
    for (std::size_t s = 0; s < k; ++s) bnd += std::exp(K * (tk - ta.t[s])) * dh[s] * (ta.t[s + 1] - ta.t[s]);
    const double l = l2_norm(positive_part(ta.w[k] - tb.w[k]));
    rep.t.push_back(tk);
    rep.lhs.push_back(l);
    rep.bound.push_back(bnd);
    rep.defect.push_back(l - bnd);
    maxbound = std::max(maxbound, bnd);
    for (std::size_t j = 0; j < ta.w[k].size(); ++j)
      if (ta.w[k][j] < tb.w[k][j] - 1e-8) rep.ordered = false;
  }
  rep.max_defect = *std::max_element(rep.defect.begin(), rep.defect.end());
  rep.scale = std::max(1.0, maxbound);
  rep.tolerance = tol_rel * rep.scale;
  rep.pass = rep.max_defect <= rep.tolerance;
  return rep;
}

}  // namespace subflow
