#pragma once

// Resolvent step w = (I + mu dJ_{0,q} - mu f1/v^(q-1))^{-1} g.
//
// The minimization runs in v = w^(1/q), where the objective is smooth for
// v > 0, and is certified in w, where it is convex. Because the v-gradient
// vanishes identically at v = 0 (q > 1), a converged iterate with exact
// zeros is probed by lifting those nodes before it is accepted.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "subflow/energy.hpp"
#include "subflow/errors.hpp"
#include "subflow/field.hpp"
#include "subflow/plap.hpp"
#include "subflow/reaction.hpp"

namespace subflow {

enum class SolverMethod {
  projected_newton,    // active-set projected Newton
  projected_gradient,  // plain projected gradient in the L2 metric
};

inline SolverMethod parse_solver_method(const std::string& s) {
  if (s == "projected_newton") return SolverMethod::projected_newton;
  if (s == "projected_gradient") return SolverMethod::projected_gradient;
  throw ValidationError("unknown solver method '" + s + "'");
}

inline const char* to_string(SolverMethod m) {
  return m == SolverMethod::projected_newton ? "projected_newton" : "projected_gradient";
}

struct SolverConfig {
  double tol_grad_abs = 1e-10;
  double tol_grad_rel = 1e-8;
  int max_iters = 20000;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double lift_factor = 1e-3;
  std::uint64_t seed = 0;
  SolverMethod method = SolverMethod::projected_newton;

  void validate() const {
    if (!(tol_grad_abs > 0.0) || !(tol_grad_rel > 0.0)) throw ValidationError("solver tolerances must be positive");
    if (max_iters < 1) throw ValidationError("solver max_iters must be >= 1");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ValidationError("armijo_c must lie in (0,1)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
      throw ValidationError("backtrack_factor must lie in (0,1)");
    if (!(lift_factor > 0.0)) throw ValidationError("lift_factor must be positive");
  }
};

struct SolveDiagnostics {
  int iterations = 0;
  bool converged = false;
  double projected_gradient = std::numeric_limits<double>::infinity();  // sup_j |P_j| / m
  double threshold = 0.0;
  double objective = 0.0;
  double step_w = std::numeric_limits<double>::infinity();  // sup |w change| of the last Newton step
  int escapes = 0;  // lifted zero nodes that lowered the objective
  std::string message;
};

struct ResolventResult {
  Field v;
  Field w;
  SolveDiagnostics diagnostics;
};

namespace detail {

/// Projected gradient: at v_j = 0 only the descent-blocking part counts.
inline double projected_gradient_norm(std::span<const double> v, std::span<const double> grad, double m) {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double pk = v[k] == 0.0 ? std::min(grad[k], 0.0) : grad[k];
    s = std::max(s, std::abs(pk));
  }
  return s / m;
}

/// Nodal (non-diffusive) second derivative of the objective in v.
inline double nodal_curvature(double v, std::size_t k, const StepObjective& obj, double m) {
  if (v <= 0.0) return 0.0;
  const double q = obj.q;
  double c = q * (2.0 * q - 1.0) * std::pow(v, 2.0 * q - 2.0) - q * (q - 1.0) * obj.g[k] * std::pow(v, q - 2.0);
  if (obj.reaction.has_f1()) c -= obj.mu * q * f1_derivative(obj.reaction, k, v);
  return m * c;
}

class NewtonSystem {
 public:
  explicit NewtonSystem(std::size_t n) : n_(n), diag_(n, 0.0) {}

  /// Fills diag() and the matrix restricted to the free nodes (active
  /// nodes get an identity row). Returns false if the factorization fails.
  bool assemble(std::span<const double> v, const StepObjective& obj, const std::vector<char>& active, bool convexify) {
    const Mesh& mesh = obj.mesh();
    const double m = mesh.cell_measure();
    const double coef = obj.mu * obj.q;
    std::fill(diag_.begin(), diag_.end(), 0.0);
    triplets_.clear();
    double dscale = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const double c = nodal_curvature(v[k], k, obj, m);
      diag_[k] = convexify ? std::max(c, 0.0) : c;
    }
    double gmax = 1.0;
    for (double x : obj.g) gmax = std::max(gmax, std::abs(x));
    const double d_floor = 1e-8 * std::pow(gmax, 1.0 / obj.q) / std::min(mesh.hx(), mesh.hy());
    for_each_edge(mesh, [&](const Edge& e) {
      const double c = coef * p_edge_curvature(edge_difference(v, e), obj.p, m, e.h, d_floor);
      if (e.a >= 0) diag_[static_cast<std::size_t>(e.a)] += c;
      if (e.b >= 0) diag_[static_cast<std::size_t>(e.b)] += c;
      if (e.a >= 0 && e.b >= 0) {
        // Keep the sparsity pattern fixed so the symbolic analysis is reusable.
        const bool coupled = !active[static_cast<std::size_t>(e.a)] && !active[static_cast<std::size_t>(e.b)];
        triplets_.emplace_back(e.a, e.b, coupled ? -c : 0.0);
        triplets_.emplace_back(e.b, e.a, coupled ? -c : 0.0);
      }
    });
    for (double d : diag_) dscale = std::max(dscale, std::abs(d));
    const double damping = std::max(1e-13 * dscale, 1e-300);
    for (std::size_t k = 0; k < n_; ++k) {
      diag_[k] += damping;
      const auto kk = static_cast<Eigen::Index>(k);
      triplets_.emplace_back(kk, kk, active[k] ? 1.0 : diag_[k]);
    }
    matrix_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    matrix_.setFromTriplets(triplets_.begin(), triplets_.end());
    if (!analyzed_) {
      solver_.analyzePattern(matrix_);
      analyzed_ = true;
    }
    solver_.factorize(matrix_);
    if (solver_.info() != Eigen::Success) return false;
    return (solver_.vectorD().array() > 0.0).all();
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return solver_.solve(rhs); }
  const std::vector<double>& diag() const noexcept { return diag_; }

 private:
  std::size_t n_;
  std::vector<double> diag_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
  bool analyzed_ = false;
};

/// Armijo backtracking along the projection arc v(a) = max(v + a d, 0).
/// On success v, value and the trial step are updated.
inline bool projected_line_search(std::vector<double>& v, double& value, std::span<const double> grad,
                                  const std::vector<double>& dir, double alpha0, const StepObjective& obj,
                                  const SolverConfig& cfg, std::vector<double>& trial, double* alpha_out) {
  double alpha = alpha0;
  for (int bt = 0; bt < 80; ++bt) {
    double slope = 0.0;
    bool moved = false;
    for (std::size_t k = 0; k < v.size(); ++k) {
      trial[k] = std::max(v[k] + alpha * dir[k], 0.0);
      const double dv = trial[k] - v[k];
      if (dv != 0.0) moved = true;
      slope += grad[k] * dv;
    }
    if (!moved) return false;
    if (slope >= 0.0) {
      alpha *= cfg.backtrack_factor;
      continue;
    }
    const double tv = objective_value(trial, obj);
    if (tv <= value + cfg.armijo_c * slope) {
      v.swap(trial);
      value = tv;
      if (alpha_out) *alpha_out = alpha;
      return true;
    }
    alpha *= cfg.backtrack_factor;
  }
  return false;
}

/// Near the minimum the objective stops resolving decreases and Armijo
/// fails. Accept the full step if the value is flat to roundoff and the
/// projected gradient drops.
inline bool roundoff_step(std::vector<double>& v, double& value, double pg, const std::vector<double>& dir,
                          const StepObjective& obj, std::vector<double>& trial, std::vector<double>& grad) {
  for (std::size_t k = 0; k < v.size(); ++k) trial[k] = std::max(v[k] + dir[k], 0.0);
  const double tv = objective_value(trial, obj);
  if (!(tv <= value + 64.0 * std::numeric_limits<double>::epsilon() * std::abs(value))) return false;
  objective_gradient(trial, obj, grad);
  if (!(projected_gradient_norm(trial, grad, obj.mesh().cell_measure()) < pg)) return false;
  v.swap(trial);
  value = tv;
  return true;
}

/// Tries to leave spurious zero sets: lifts zero nodes with g > 0 to
/// c_lift g^(1/q), one by one and then all at once. Returns accepted lifts.
inline int escape_zero_nodes(std::vector<double>& v, double& value, const StepObjective& obj,
                             const SolverConfig& cfg) {
  int accepted = 0;
  std::vector<std::size_t> zeros;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] == 0.0 && obj.g[k] > 0.0) zeros.push_back(k);
  if (zeros.empty()) return 0;
  for (std::size_t k : zeros) {
    v[k] = cfg.lift_factor * std::pow(obj.g[k], 1.0 / obj.q);
    const double tv = objective_value(v, obj);
    if (tv < value) {
      value = tv;
      ++accepted;
    } else {
      v[k] = 0.0;
    }
  }
  if (accepted == 0) {
    for (std::size_t k : zeros) v[k] = cfg.lift_factor * std::pow(obj.g[k], 1.0 / obj.q);
    const double tv = objective_value(v, obj);
    if (tv < value) {
      value = tv;
      accepted = static_cast<int>(zeros.size());
    } else {
      for (std::size_t k : zeros) v[k] = 0.0;
    }
  }
  return accepted;
}

/// One Gauss-Seidel pass of exact nodal minimizations. In w each nodal
/// problem is convex, so its minimizer is where the nodal derivative changes
/// sign; the derivative in v has the same sign for v > 0, and bisection on
/// that sign avoids the sqrt(eps) floor of value comparisons. Returns the
/// largest change in w.
class NodalSweep {
 public:
  explicit NodalSweep(const Mesh& mesh) : incident_(mesh.size()) {
    for_each_edge(mesh, [&](const Edge& e) {
      if (e.a >= 0) incident_[static_cast<std::size_t>(e.a)].push_back(e);
      if (e.b >= 0) incident_[static_cast<std::size_t>(e.b)].push_back(e);
    });
  }

  /// Nodes whose minimizer lies below w_floor are sent to zero.
  double run(std::vector<double>& v, const StepObjective& obj, double w_floor) const {
    const double m = obj.mesh().cell_measure();
    const double q = obj.q;
    double moved = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double saved = v[k];
      // dPhi/dv_k with the neighbours frozen
      auto slope = [&](double vk) {
        v[k] = vk;
        double s = m * q * safe_pow(vk, q - 1.0) * (safe_pow(vk, q) - obj.g[k]);
        for (const Edge& e : incident_[k]) {
          const double c = obj.mu * q * m * p_flux(edge_difference(v, e), obj.p) / e.h;
          s += e.b == static_cast<std::ptrdiff_t>(k) ? c : -c;
        }
        if (obj.reaction.has_f1()) s -= obj.mu * q * m * f1_value(obj.reaction, k, vk);
        return s;
      };
      const double w_old = safe_pow(saved, q);
      double w_new = 0.0;
      // the v-slope vanishes at v = 0 for q > 1, so probe just above it
      if (slope(std::pow(w_floor, 1.0 / q)) < 0.0) {
        double lo = w_floor;
        double hi = std::max({2.0 * w_old, 2.0 * std::max(obj.g[k], 0.0), 2.0 * w_floor});
        for (int i = 0; i < 2100 && slope(std::pow(hi, 1.0 / q)) < 0.0; ++i) {
          lo = hi;
          hi *= 2.0;
        }
        for (int i = 0; i < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
          const double mid = 0.5 * (lo + hi);
          (slope(std::pow(mid, 1.0 / q)) < 0.0 ? lo : hi) = mid;
        }
        w_new = 0.5 * (lo + hi);
      }
      v[k] = w_new > 0.0 ? std::pow(w_new, 1.0 / q) : 0.0;
      moved = std::max(moved, std::abs(w_new - w_old));
    }
    return moved;
  }

 private:
  std::vector<std::vector<Edge>> incident_;
};

}  // namespace detail

/// Minimizes the step objective over v >= 0.
///
/// Let tol = tol_grad_abs + tol_grad_rel * max(1, sup|g|). The Newton method
/// stops when a full step on the exact Hessian would move w = v^q by at most
/// tol at every node and an exact nodal sweep confirms it; the gradient
/// method stops when the projected gradient divided by the cell measure has
/// sup norm at most tol. Exceeding max_iters
/// returns the last iterate with converged = false.
inline ResolventResult solve_resolvent(const StepObjective& obj, const Field& v_init, const SolverConfig& cfg) {
  cfg.validate();
  v_init.same_mesh(obj.g, "solve_resolvent");
  if (!v_init.is_nonnegative()) throw ValidationError("solve_resolvent: v_init must be nonnegative");

  const Mesh& mesh = obj.mesh();
  const std::size_t n = mesh.size();
  const double m = mesh.cell_measure();
  double gscale = 1.0;
  for (double x : obj.g) gscale = std::max(gscale, std::abs(x));

  SolveDiagnostics diag;
  diag.threshold = cfg.tol_grad_abs + cfg.tol_grad_rel * gscale;

  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k)
    v[k] = std::max(v_init[k], cfg.lift_factor * std::pow(std::max(obj.g[k], 0.0), 1.0 / obj.q));

  std::vector<double> grad(n), grad2(n), dir(n), trial(n);
  std::vector<char> active(n, 0);
  detail::NewtonSystem newton(n);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  double value = detail::objective_value(v, obj);
  double pg_alpha = 1.0;
  int escape_rounds = 0;
  int stalls = 0;
  const detail::NodalSweep sweep(mesh);

  // Converged escape check; returns true when no zero node could be lifted.
  auto settle = [&]() {
    const int lifted = escape_rounds < 64 ? detail::escape_zero_nodes(v, value, obj, cfg) : 0;
    if (lifted == 0) return true;
    ++escape_rounds;
    diag.escapes += lifted;
    return false;
  };

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    detail::objective_gradient(v, obj, grad);
    const double pg = detail::projected_gradient_norm(v, grad, m);
    diag.projected_gradient = pg;

    bool stepped = false;
    if (cfg.method == SolverMethod::projected_newton) {
      if (pg == 0.0 && settle()) {
        diag.converged = true;
        break;
      }
      // Active set: nodes at (or numerically near) zero that the gradient pushes down.
      double eps = 0.0;
      for (std::size_t k = 0; k < n; ++k) eps = std::max(eps, std::abs(v[k] - std::max(v[k] - grad[k] / m, 0.0)));
      eps = std::min(eps, 1e-6);
      for (std::size_t k = 0; k < n; ++k) active[k] = (v[k] <= eps && grad[k] > 0.0) ? 1 : 0;
      // Exact Hessian first (it is positive definite near a strict minimizer),
      // the convexified one otherwise.
      bool exact = newton.assemble(v, obj, active, false);
      bool ok = exact || newton.assemble(v, obj, active, true);
      if (ok) {
        for (std::size_t k = 0; k < n; ++k) rhs[static_cast<Eigen::Index>(k)] = active[k] ? 0.0 : -grad[k];
        const Eigen::VectorXd d = newton.solve(rhs);
        bool finite = true;
        double dw = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          dir[k] = active[k] ? -v[k] : d[static_cast<Eigen::Index>(k)];
          if (!std::isfinite(dir[k])) finite = false;
          dw = std::max(dw, std::abs(safe_pow(std::max(v[k] + dir[k], 0.0), obj.q) - safe_pow(v[k], obj.q)));
        }
        diag.step_w = dw;
        const double before = value;
        if (finite) stepped = detail::projected_line_search(v, value, grad, dir, 1.0, obj, cfg, trial, nullptr);
        if (finite && exact && !stepped) stepped = detail::roundoff_step(v, value, pg, dir, obj, trial, grad2);
        stalls = stepped && before - value <= 1e-14 * std::abs(value) ? stalls + 1 : 0;
        // Candidate once the full Newton step moves w by less than the
        // threshold (the step is still taken, so nodes the active set sends
        // to zero land exactly on zero), or when Newton only crawls. Near
        // v = 0 the v-curvature grows like v^(q-2) and the Newton model can
        // be arbitrarily poor, so a nodal sweep certifies the candidate.
        if (finite && exact && (dw <= diag.threshold || stalls >= 3)) {
          stalls = 0;
          trial = v;
          const double moved = sweep.run(trial, obj, 1e-6 * diag.threshold);
          // a passing sweep only certifies; Newton's point keeps the symmetry
          if (moved > diag.threshold) {
            v.swap(trial);
            value = detail::objective_value(v, obj);
            continue;
          }
          if (settle()) {
            diag.converged = true;
            ++it;
            break;
          }
          continue;
        }
      }
      if (!stepped) {
        // Diagonally scaled gradient as a fallback direction.
        newton.assemble(v, obj, active, true);
        const auto& dg = newton.diag();
        for (std::size_t k = 0; k < n; ++k) dir[k] = -grad[k] / (dg[k] > 0.0 ? dg[k] : m);
        stepped = detail::projected_line_search(v, value, grad, dir, 1.0, obj, cfg, trial, nullptr);
      }
    } else {
      if (pg <= diag.threshold) {
        if (settle()) {
          diag.converged = true;
          break;
        }
        continue;
      }
      for (std::size_t k = 0; k < n; ++k) dir[k] = -grad[k] / m;
      double used = pg_alpha;
      stepped = detail::projected_line_search(v, value, grad, dir, std::min(2.0 * pg_alpha, 1e12), obj, cfg, trial,
                                              &used);
      if (stepped) pg_alpha = used;
    }

    if (!stepped) {
      diag.message = "line search stalled";
      break;
    }
  }
  diag.iterations = it;
  if (!diag.converged) {
    detail::objective_gradient(v, obj, grad);
    diag.projected_gradient = detail::projected_gradient_norm(v, grad, m);
    if (cfg.method == SolverMethod::projected_gradient) diag.converged = diag.projected_gradient <= diag.threshold;
    if (!diag.converged && diag.message.empty()) diag.message = "max_iters exceeded";
  }
  diag.objective = value;

  Field vf(mesh, std::move(v));
  Field wf = power(vf, obj.q);
  return {std::move(vf), std::move(wf), diag};
}

inline ResolventResult solve_resolvent(const StepObjective& obj, const SolverConfig& cfg = {}) {
  return solve_resolvent(obj, Field(obj.mesh()), cfg);
}

/// Independent global minimizer for tiny meshes: cyclic coordinate
/// minimization in w, each nodal subproblem solved by golden-section search
/// on [0, w_hi]. The w-objective is convex, so sweeps converge to the
/// global minimum. Not reliable for q = p, where J_{0,q} is not
/// differentiable at w = 0 and single-node moves can stall.
inline Field brute_force_resolvent(const StepObjective& obj, const SolverConfig& cfg = {}) {
  (void)cfg;
  const Mesh& mesh = obj.mesh();
  if (mesh.size() > 8) throw ValidationError("brute_force_resolvent supports at most 8 interior nodes");
  const std::size_t n = mesh.size();
  const double m = mesh.cell_measure();
  const double p = obj.p;
  const double q = obj.q;

  // Edges incident to each node.
  std::vector<std::vector<Edge>> incident(n);
  for_each_edge(mesh, [&](const Edge& e) {
    if (e.a >= 0) incident[static_cast<std::size_t>(e.a)].push_back(e);
    if (e.b >= 0) incident[static_cast<std::size_t>(e.b)].push_back(e);
  });

  double gmax = 0.0;
  double a0max = 0.0;
  for (double x : obj.g) gmax = std::max(gmax, x);
  if (obj.reaction.has_f1()) {
    for (double x : a0_field(obj.reaction, mesh, q)) a0max = std::max(a0max, x);
  }
  const double w_hi = 2.0 * gmax + 1.0 + obj.mu * a0max;

  std::vector<double> v(n);
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = std::max(obj.g[k], 0.0);
    v[k] = std::pow(w[k], 1.0 / q);
  }

  auto local = [&](std::size_t k, double wk) {
    const double vk = std::pow(wk, 1.0 / q);
    const double saved = v[k];
    v[k] = vk;
    double e = 0.0;
    for (const Edge& ed : incident[k]) {
      const double d = detail::edge_difference(v, ed);
      e += std::pow(std::abs(d), p);
    }
    v[k] = saved;
    double val = 0.5 * m * (wk - obj.g[k]) * (wk - obj.g[k]) + obj.mu * q * m * e / p;
    if (obj.reaction.has_f1()) val -= obj.mu * q * m * f1_potential(obj.reaction, k, vk);
    return val;
  };

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double a = 0.0;
      double b = w_hi;
      double c = b - invphi * (b - a);
      double d = a + invphi * (b - a);
      double fc = local(k, c);
      double fd = local(k, d);
      while (b - a > 1e-15 * w_hi) {
        if (fc <= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - invphi * (b - a);
          fc = local(k, c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + invphi * (b - a);
          fd = local(k, d);
        }
      }
      double best = 0.5 * (a + b);
      // The interval endpoints are candidates too: the minimum may sit at w = 0.
      if (local(k, 0.0) <= local(k, best)) best = 0.0;
      change = std::max(change, std::abs(best - w[k]));
      w[k] = best;
      v[k] = std::pow(best, 1.0 / q);
    }
    if (change <= 1e-12) break;
  }
  return Field(mesh, std::move(w));
}

/// Sup-norm of the stationarity defect in w-units:
/// (w - g) - mu Delta_p v / v^(q-1) - mu f1(v)/v^(q-1) at w > 0; at w = 0 the
/// one-sided violation max(0, -dPhi/dv / m).
inline double residual_check(const Field& w, const StepObjective& obj) {
  w.same_mesh(obj.g, "residual_check");
  if (!w.is_nonnegative()) throw ValidationError("residual_check needs w >= 0");
  const double q = obj.q;
  const Field v = power(w, 1.0 / q);
  const Field lap = apply_p_laplacian(v, PExponent(obj.p));
  const Field grad = objective_gradient(v, obj);
  const double m = w.mesh().cell_measure();
  double r = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] > 0.0) {
      const double vq1 = std::pow(v[k], q - 1.0);
      double rk = q * vq1 * (w[k] - obj.g[k]) - obj.mu * q * lap[k];
      if (obj.reaction.has_f1()) rk -= obj.mu * q * f1_value(obj.reaction, k, v[k]);
      r = std::max(r, std::abs(rk / (q * vq1)));
    } else {
      r = std::max(r, std::max(0.0, -grad[k] / m));
    }
  }
  return r;
}

/// Discrete maximum principle: max w <= max g_+ + tol.
inline bool maximum_bound_check(const Field& w, const Field& g, double tol = 1e-8) {
  w.same_mesh(g, "maximum_bound_check");
  return max_value(w) <= max_value(positive_part(g)) + tol;
}

}  // namespace subflow
