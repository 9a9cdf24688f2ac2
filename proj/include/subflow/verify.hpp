#pragma once

// Audit suites. Every suite draws its random data up front from one
// seeded engine, runs trials on the worker pool into per-trial slots and
// merges in trial order, so reports are identical for any thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "subflow/energy.hpp"
#include "subflow/errors.hpp"
#include "subflow/evolve.hpp"
#include "subflow/field.hpp"
#include "subflow/mesh.hpp"
#include "subflow/parallel.hpp"
#include "subflow/plap.hpp"
#include "subflow/profiles.hpp"
#include "subflow/reaction.hpp"
#include "subflow/resolvent.hpp"

namespace subflow {

/// One audited inequality, observed over one or more samples.
/// upper: pass iff value <= limit; otherwise pass iff value >= limit.
struct Check {
  std::string name;
  double limit = 0.0;
  bool upper = true;
  std::size_t passed = 0;
  std::size_t total = 0;
  double worst = std::numeric_limits<double>::quiet_NaN();
  std::string detail;

  Check() = default;
  Check(std::string n, double lim, bool up = true) : name(std::move(n)), limit(lim), upper(up) {}

  void observe(double value) {
    ++total;
    const bool ok = upper ? value <= limit : value >= limit;  // NaN fails
    if (ok) ++passed;
    if (std::isnan(value)) {
      worst = upper ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    } else if (std::isnan(worst) || (upper ? value > worst : value < worst)) {
      worst = value;
    }
  }

  /// Records a sample that could not be evaluated (solver failure etc.).
  void fail(const std::string& why) {
    ++total;
    worst = upper ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    if (!detail.empty()) detail += "; ";
    detail += why;
  }

  bool pass() const noexcept { return total > 0 && passed == total; }
  /// Distance to the limit on the passing side; negative when failing.
  double margin() const noexcept { return upper ? limit - worst : worst - limit; }
};

struct SuiteReport {
  std::string suite;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<Check> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
  }
  double worst_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Check& c : checks) m = std::min(m, c.margin());
    return m;
  }
  void param(const std::string& k, double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    params.emplace_back(k, os.str());
  }
  void param(const std::string& k, std::string v) { params.emplace_back(k, std::move(v)); }
  void append(const SuiteReport& other) {
    for (const Check& c : other.checks) {
      checks.push_back(c);
      checks.back().name = other.suite + "." + c.name;
    }
  }
};

// ---------------------------------------------------------------- fitting

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("slope fit needs distinct abscissae");
  return sxy / sxx;
}

/// alpha in |w(t)| ~ t^(-alpha), fitted on samples with t in [t_lo, t_hi].
inline double fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& norm, double t_lo,
                                 double t_hi) {
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw ValidationError("decay window must satisfy 0 < t_lo < t_hi");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_lo || t[k] > t_hi) continue;
    if (!(norm[k] > 0.0))
      throw ValidationError("norm vanished at t=" + std::to_string(t[k]) + " inside the decay window");
    x.push_back(std::log(t[k]));
    y.push_back(std::log(norm[k]));
  }
  if (x.size() < 2) throw ValidationError("decay window holds fewer than two samples");
  return -ls_slope(x, y);
}

inline double fit_decay_exponent(const Trajectory& traj, double t_lo, double t_hi) {
  if (!traj.t.empty() && t_hi > traj.t.back() * (1.0 + 1e-12))
    throw ValidationError("decay window extends past the horizon");
  return fit_decay_exponent(traj.t, traj.l2_w, t_lo, t_hi);
}

/// Slope of log v against log d(x, boundary) over nodes with d < band.
inline double fit_boundary_exponent(const Field& v, double band) {
  const Mesh& mesh = v.mesh();
  int per_side[4] = {0, 0, 0, 0};
  std::vector<double> x, y;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double d = mesh.distance_to_boundary(k);
    if (!(d < band)) continue;
    if (!(v[k] > 0.0)) throw ValidationError("zero node in the boundary band at distance " + std::to_string(d));
    const double xk = mesh.x(k);
    const double yk = mesh.y(k);
    if (d == xk) ++per_side[0];
    if (d == mesh.lx() - xk) ++per_side[1];
    if (mesh.dim() == 2) {
      if (d == yk) ++per_side[2];
      if (d == mesh.ly() - yk) ++per_side[3];
    }
    x.push_back(std::log(d));
    y.push_back(std::log(v[k]));
  }
  const int sides = mesh.dim() == 1 ? 2 : 4;
  for (int s = 0; s < sides; ++s)
    if (per_side[s] < 4) throw ValidationError("boundary band holds fewer than 4 nodes on some side");
  return ls_slope(x, y);
}

// ------------------------------------------------------------- resolvent

namespace detail {

inline Field random_field(const Mesh& mesh, std::mt19937_64& rng, double lo, double hi) {
  std::vector<double> v(mesh.size());
  for (double& x : v) x = uniform(rng, lo, hi);
  return Field(mesh, std::move(v));
}

/// Nonnegative probe field; about a fifth of the nodes are exact zeros.
inline Field random_cone_field(const Mesh& mesh, std::mt19937_64& rng) {
  std::vector<double> v(mesh.size());
  for (double& x : v) {
    const double u = unit_uniform(rng);
    const double a = unit_uniform(rng);
    x = u < 0.2 ? 0.0 : a;
  }
  return Field(mesh, std::move(v));
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace detail

struct ContractionOptions {
  double p = 3.0;
  double q = 1.2;
  double mu = 0.05;
  int n = 32;
  int trials = 50;
  std::uint64_t seed = 1;
  double slack = 1e-6;
  double bound_tol = 1e-8;
  SolverConfig solver;
};

/// T-contraction |(w - w^)+| <= |(g - g^)+| + slack for random data, and the
/// maximum bound max w <= max g+ + bound_tol for every solve.
inline SuiteReport suite_contraction(const ContractionOptions& o) {
  if (o.trials < 1) throw ValidationError("trials must be >= 1");
  const Mesh mesh = Mesh::interval(1.0, o.n);
  std::mt19937_64 rng(o.seed);
  std::vector<std::pair<Field, Field>> data;
  for (int t = 0; t < o.trials; ++t) {
    Field a = detail::random_field(mesh, rng, -1.0, 1.0);
    Field b = detail::random_field(mesh, rng, -1.0, 1.0);
    data.emplace_back(std::move(a), std::move(b));
  }
  struct Out {
    bool ok = false;
    std::string why;
    double contraction = 0.0;
    double bound[2] = {0.0, 0.0};
  };
  std::vector<Out> out(data.size());
  parallel_for(data.size(), [&](std::size_t t) {
    const StepObjective oa(data[t].first, o.p, o.q, o.mu);
    const StepObjective ob(data[t].second, o.p, o.q, o.mu);
    const ResolventResult ra = solve_resolvent(oa, o.solver);
    const ResolventResult rb = solve_resolvent(ob, o.solver);
    if (!ra.diagnostics.converged || !rb.diagnostics.converged) {
      out[t].why = "trial " + std::to_string(t) + ": " +
                   (!ra.diagnostics.converged ? ra.diagnostics.message : rb.diagnostics.message);
      return;
    }
    out[t].ok = true;
    out[t].contraction = l2_norm(positive_part(ra.w - rb.w)) - l2_norm(positive_part(data[t].first - data[t].second));
    out[t].bound[0] = max_value(ra.w) - max_value(positive_part(data[t].first));
    out[t].bound[1] = max_value(rb.w) - max_value(positive_part(data[t].second));
  });
  SuiteReport rep;
  rep.suite = "contraction";
  rep.param("p", o.p);
  rep.param("q", o.q);
  rep.param("mu", o.mu);
  rep.param("n", o.n);
  rep.param("trials", o.trials);
  rep.param("seed", static_cast<double>(o.seed));
  Check c("t_contraction", o.slack);
  Check b("max_bound", o.bound_tol);
  for (const Out& r : out) {
    if (!r.ok) {
      c.fail(r.why);
      b.fail(r.why);
      continue;
    }
    c.observe(r.contraction);
    b.observe(r.bound[0]);
    b.observe(r.bound[1]);
  }
  rep.checks = {c, b};
  return rep;
}

struct OracleOptions {
  std::vector<std::pair<double, double>> pq = {{2.0, 1.5}, {3.0, 1.2}};
  std::vector<int> sizes = {3, 6};
  double mu = 0.1;
  int trials = 20;
  std::uint64_t seed = 2;
  double tol = 1e-6;
  SolverConfig solver;
};

/// solve_resolvent against the coordinate-search oracle on tiny meshes.
inline SuiteReport suite_oracle(const OracleOptions& o) {
  struct Case {
    double p, q;
    Field g;
  };
  std::mt19937_64 rng(o.seed);
  std::vector<Case> cases;
  for (const auto& [p, q] : o.pq)
    for (int n : o.sizes)
      for (int t = 0; t < o.trials; ++t)
        cases.push_back({p, q, detail::random_field(Mesh::interval(1.0, n), rng, -0.5, 1.5)});
  std::vector<double> err(cases.size(), std::numeric_limits<double>::infinity());
  std::vector<std::string> why(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    const StepObjective obj(cases[i].g, cases[i].p, cases[i].q, o.mu);
    const ResolventResult r = solve_resolvent(obj, o.solver);
    if (!r.diagnostics.converged) {
      why[i] = r.diagnostics.message;
      return;
    }
    err[i] = sup_norm(r.w - brute_force_resolvent(obj, o.solver));
  });
  SuiteReport rep;
  rep.suite = "oracle";
  rep.param("mu", o.mu);
  rep.param("trials", o.trials);
  rep.param("seed", static_cast<double>(o.seed));
  std::size_t i = 0;
  for (const auto& [p, q] : o.pq) {
    for (int n : o.sizes) {
      Check c("p=" + detail::fmt(p) + " q=" + detail::fmt(q) + " n=" + std::to_string(n), o.tol);
      for (int t = 0; t < o.trials; ++t, ++i) {
        if (!why[i].empty())
          c.fail(why[i]);
        else
          c.observe(err[i]);
      }
      rep.checks.push_back(c);
    }
  }
  return rep;
}

struct BoundaryOptions {
  double p = 3.0;
  double q = 1.2;
  double mu = 0.05;
  double h = 1.0;
  int n = 256;
  double band = 0.1;
  double slack = 1.1;
  SolverConfig solver;
};

/// Resolvent of the constant datum h: all nodes positive, and the vanishing
/// rate at the boundary no faster than d^(p/(p-2q)) (q < p/2).
inline SuiteReport suite_boundary(const BoundaryOptions& o) {
  if (!(2.0 * o.q < o.p)) throw ValidationError("boundary suite needs q < p/2");
  const Mesh mesh = Mesh::interval(1.0, o.n);
  const StepObjective obj(Field(mesh, o.h), o.p, o.q, o.mu);
  const ResolventResult r = solve_resolvent(obj, o.solver);
  SuiteReport rep;
  rep.suite = "boundary";
  rep.param("p", o.p);
  rep.param("q", o.q);
  rep.param("mu", o.mu);
  rep.param("n", o.n);
  rep.param("band", o.band);
  const double bound = o.p / (o.p - 2.0 * o.q);
  Check pos("min_v_positive", 0.0, false);
  Check ex("boundary_exponent", bound * o.slack);
  if (!r.diagnostics.converged) {
    pos.fail(r.diagnostics.message);
    ex.fail(r.diagnostics.message);
  } else {
    double vmin = std::numeric_limits<double>::infinity();
    for (double x : r.v) vmin = std::min(vmin, x);
    // strict positivity: observe min v against 0 from above
    pos.observe(vmin > 0.0 ? vmin : -1.0);
    try {
      ex.observe(fit_boundary_exponent(r.v, o.band));
    } catch (const ValidationError& e) {
      ex.fail(e.what());
    }
  }
  rep.checks = {pos, ex};
  return rep;
}

// ------------------------------------------------------------ structure

struct HomogeneityOptions {
  double p = 3.0;
  double q = 1.5;
  int n = 32;
  int trials = 20;
  std::uint64_t seed = 3;
  std::vector<double> factors = {0.5, 2.0, 10.0};
  double tol = 1e-12;
};

/// A(r w) = r^theta A(w), theta = (p-q)/q, in sup-relative deviation; on a
/// 1D mesh and a 2D mesh.
inline SuiteReport suite_homogeneity(const HomogeneityOptions& o) {
  const double theta = (o.p - o.q) / o.q;
  std::mt19937_64 rng(o.seed);
  const Mesh meshes[2] = {Mesh::interval(1.0, o.n), Mesh::rectangle(1.0, 1.0, std::max(2, o.n / 4), std::max(2, o.n / 4))};
  SuiteReport rep;
  rep.suite = "homogeneity";
  rep.param("p", o.p);
  rep.param("q", o.q);
  rep.param("theta", theta);
  rep.param("n", o.n);
  rep.param("trials", o.trials);
  std::vector<Check> checks;
  for (double r : o.factors) checks.emplace_back("r=" + detail::fmt(r), o.tol);
  for (int t = 0; t < o.trials; ++t) {
    for (const Mesh& mesh : meshes) {
      const Field v = detail::random_field(mesh, rng, 0.1, 1.0);
      const Field w = power(v, o.q);
      const Field a = j0q_operator(w, o.p, o.q);
      for (std::size_t i = 0; i < o.factors.size(); ++i) {
        const double r = o.factors[i];
        const Field ar = j0q_operator(r * w, o.p, o.q);
        const Field expect = std::pow(r, theta) * a;
        checks[i].observe(sup_norm(ar - expect) / std::max(sup_norm(expect), std::numeric_limits<double>::min()));
      }
    }
  }
  rep.checks = std::move(checks);
  return rep;
}

struct ConvexityOptions {
  double p = 3.0;
  double q = 1.2;
  int n = 32;
  int trials = 200;
  std::uint64_t seed = 4;
  double tol = 1e-12;
  std::vector<int> picone_sizes = {32, 64, 128};
  double picone_rate = 1.8;
};

/// Midpoint convexity and submodularity of J_{0,q}, submodularity of E_p,
/// convexity of the step objective along w-segments, and the discrete
/// Picone gap under refinement.
inline SuiteReport suite_convexity_picone(const ConvexityOptions& o) {
  const Mesh mesh = Mesh::interval(1.0, o.n);
  std::mt19937_64 rng(o.seed);
  Check convex("j0q_midpoint_convexity", o.tol);
  Check submod("j0q_submodularity", o.tol);
  Check esub("p_energy_submodularity", o.tol);
  Check hidden("objective_w_convexity", o.tol);
  const PExponent pe(o.p);
  for (int t = 0; t < o.trials; ++t) {
    const Field a = detail::random_cone_field(mesh, rng);
    const Field b = detail::random_cone_field(mesh, rng);
    const double ja = j0q(a, o.p, o.q);
    const double jb = j0q(b, o.p, o.q);
    const double scale = std::max(0.5 * ja + 0.5 * jb, std::numeric_limits<double>::min());
    convex.observe(-convexity_gap(a, b, 0.5, o.p, o.q) / scale);

    const double s = ja + jb;
    const double lo = j0q(nodal_min(a, b), o.p, o.q);
    const double hi = j0q(nodal_max(a, b), o.p, o.q);
    submod.observe((lo + hi - s) / std::max(s, std::numeric_limits<double>::min()));

    // signed fields for the plain energy
    const Field x = detail::random_field(mesh, rng, -1.0, 1.0);
    const Field y = detail::random_field(mesh, rng, -1.0, 1.0);
    const double es = p_energy(x, pe) + p_energy(y, pe);
    esub.observe((p_energy(nodal_min(x, y), pe) + p_energy(nodal_max(x, y), pe) - es) / es);

    const StepObjective obj(detail::random_field(mesh, rng, -1.0, 1.0), o.p, o.q, 0.05);
    const auto phi = [&](const Field& w) { return objective_value(power(w, 1.0 / o.q), obj); };
    const double fa = phi(a);
    const double fb = phi(b);
    const double fm = phi(0.5 * a + 0.5 * b);
    hidden.observe((fm - 0.5 * fa - 0.5 * fb) / std::max(0.5 * (std::abs(fa) + std::abs(fb)), 1e-300));
  }

  // Picone gap for u = sin(pi x), z = x(1-x) on refining meshes. The global
  // gap may be exactly nonnegative, in which case the rate check is vacuous.
  Check picone_tol("picone_negative_part", 1.0);
  Check picone_rate("picone_refinement_rate", o.picone_rate, false);
  std::vector<double> neg;
  std::string gaps;
  for (int n : o.picone_sizes) {
    const Mesh m = Mesh::interval(1.0, n);
    const Field u = Field::from_function(m, [](double x, double) { return std::sin(std::numbers::pi * x); });
    const Field z = Field::from_function(m, [](double x, double) { return x * (1.0 - x); });
    const double gap = picone_gap(u, z, o.p, o.q);
    const PExponent pp(o.p);
    const double scale = o.q * p_energy(z, pp) + (o.p - o.q) * p_energy(u, pp);
    const double ng = std::max(0.0, -gap);
    neg.push_back(ng);
    // negative part against 10/n * scale
    picone_tol.observe(ng / (10.0 / n * scale));
    if (!gaps.empty()) gaps += ", ";
    gaps += "n=" + std::to_string(n) + ": " + detail::fmt(gap);
  }
  picone_tol.detail = "gap " + gaps;
  for (std::size_t i = 1; i < neg.size(); ++i) {
    if (neg[i - 1] <= 1e-14) {
      picone_rate.observe(std::numeric_limits<double>::infinity());  // already nonnegative
    } else {
      picone_rate.observe(neg[i] > 0.0 ? neg[i - 1] / neg[i] : std::numeric_limits<double>::infinity());
    }
  }
  if (picone_rate.total == 0) picone_rate.observe(std::numeric_limits<double>::infinity());

  SuiteReport rep;
  rep.suite = "convexity";
  rep.param("p", o.p);
  rep.param("q", o.q);
  rep.param("n", o.n);
  rep.param("trials", o.trials);
  rep.param("seed", static_cast<double>(o.seed));
  rep.checks = {convex, submod, esub, hidden, picone_tol, picone_rate};
  return rep;
}

struct GradientOptions {
  std::vector<double> energy_p = {1.5, 2.0, 3.0, 4.0};
  int n = 16;
  int trials = 5;
  std::uint64_t seed = 5;
  double tol = 1e-6;
};

/// Analytic gradients against central differences with step 1e-6 * scale.
inline SuiteReport suite_gradients(const GradientOptions& o) {
  std::mt19937_64 rng(o.seed);
  const Mesh m1 = Mesh::interval(1.0, o.n);
  const Mesh m2 = Mesh::rectangle(1.0, 1.5, std::max(2, o.n / 4), std::max(2, o.n / 3));

  const auto fd = [](std::vector<double> x, const std::function<double(const std::vector<double>&)>& f) {
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    const double h = 1e-6 * std::max(scale, 1.0);
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double keep = x[k];
      x[k] = keep + h;
      const double fp = f(x);
      x[k] = keep - h;
      const double fm = f(x);
      x[k] = keep;
      g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
  };
  const auto rel = [](std::span<const double> a, const std::vector<double>& b) {
    double d = 0.0, s = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      d = std::max(d, std::abs(a[k] - b[k]));
      s = std::max(s, std::abs(b[k]));
    }
    return d / std::max(s, 1e-300);
  };

  SuiteReport rep;
  rep.suite = "gradients";
  rep.param("n", o.n);
  rep.param("trials", o.trials);
  rep.param("seed", static_cast<double>(o.seed));
  for (double p : o.energy_p) {
    Check c("p_energy_gradient p=" + detail::fmt(p), o.tol);
    for (int t = 0; t < o.trials; ++t) {
      for (const Mesh* mesh : {&m1, &m2}) {
        const Field v = detail::random_field(*mesh, rng, -1.0, 1.0);
        const Field g = p_energy_gradient(v, PExponent(p));
        const auto num = fd({v.begin(), v.end()}, [&](const std::vector<double>& x) {
          return p_energy(std::span<const double>(x), *mesh, p);
        });
        c.observe(rel(g.values(), num));
      }
    }
    rep.checks.push_back(c);
  }
  struct ObjCase {
    double p, q;
    bool reaction;
  };
  for (const ObjCase oc : {ObjCase{3.0, 1.5, false}, ObjCase{3.0, 1.5, true}, ObjCase{2.0, 2.0, true},
                           ObjCase{1.5, 1.2, false}}) {
    Check c("objective_gradient p=" + detail::fmt(oc.p) + " q=" + detail::fmt(oc.q) +
                (oc.reaction ? " f1" : ""),
            o.tol);
    for (int t = 0; t < o.trials; ++t) {
      for (const Mesh* mesh : {&m1, &m2}) {
        ReactionSpec rs;
        if (oc.reaction) {
          rs.f1_terms.push_back({Field(*mesh, 0.7), oc.q});
          rs.f1_terms.push_back({detail::random_field(*mesh, rng, -1.0, 0.0), 2.0 * oc.q});
        }
        const StepObjective obj(detail::random_field(*mesh, rng, -1.0, 1.0), oc.p, oc.q, 0.1, rs);
        const Field v = detail::random_field(*mesh, rng, 0.2, 1.0);
        const Field g = objective_gradient(v, obj);
        const auto num = fd({v.begin(), v.end()}, [&](const std::vector<double>& x) {
          return detail::objective_value(std::span<const double>(x), obj);
        });
        c.observe(rel(g.values(), num));
      }
    }
    rep.checks.push_back(c);
  }
  {
    Check c("f1_potential_derivative", 1e-8);
    ReactionSpec rs;
    rs.f1_terms.push_back({Field(m1, 1.3), 1.5});
    rs.f1_terms.push_back({Field(m1, -2.0), 3.0});
    for (int t = 0; t < 20; ++t) {
      const double v = uniform(rng, 0.1, 2.0);
      const double h = 1e-5 * v;
      const double num = (f1_potential(rs, 0, v + h) - f1_potential(rs, 0, v - h)) / (2.0 * h);
      const double ex = f1_value(rs, 0, v);
      c.observe(std::abs(num - ex) / std::max(std::abs(ex), 1e-300));
    }
    rep.checks.push_back(c);
  }
  return rep;
}

// ------------------------------------------------------------- parabolic

struct ParabolicOptions {
  int n = 64;
  int comparison_steps = 200;
  double comparison_T = 1.0;
  double comparison_tol = 1e-3;
  double sin_lambda = 0.5;
  int extinction_steps = 200;
  double extinction_T = 1.0;
  double extinction_drift = 0.2;
  double decay_T = 100.0;
  int decay_steps = 400;
  double decay_growth = 1.01;
  double decay_t_lo = 10.0;
  double decay_slack = 0.02;
  int halving_steps = 20;
  double halving_T = 0.05;
  double halving_lo = 1.5;
  double halving_hi = 2.5;
  double dissipation_tol = 1e-10;
  double bound_tol = 1e-8;
  SolverConfig solver;
};

/// Named scenario packs: "default", "empty", or a single scenario name.
inline std::vector<std::string> parabolic_scenarios(const std::string& pack) {
  const std::vector<std::string> all{"comparison_k0", "comparison_k05", "extinction",
                                     "decay",         "dissipation",    "first_order"};
  if (pack == "empty") return {};
  if (pack == "default") return all;
  if (std::find(all.begin(), all.end(), pack) != all.end()) return {pack};
  throw ValidationError("unknown scenario pack '" + pack + "' (expected default, empty or a scenario name)");
}

namespace detail {

inline EvolutionSpec sin_spec(const ParabolicOptions& o, double p, double q, double T, StepPolicy policy) {
  const Mesh mesh = Mesh::interval(1.0, o.n);
  EvolutionSpec s(mesh, p, q, make_profile(mesh, ProfileSpec::named("sin")));
  s.T = T;
  s.policy = policy;
  s.solver = o.solver;
  return s;
}

inline void require_complete(const Trajectory& tr, const char* what) {
  if (!tr.complete) throw ValidationError(std::string(what) + ": " + tr.message);
}

/// Comparison pair: A has the larger data (u0 and forcing), B the smaller.
inline std::vector<Check> scenario_comparison(const ParabolicOptions& o, bool lipschitz) {
  EvolutionSpec a = sin_spec(o, 2.0, 1.5, o.comparison_T, StepPolicy::uniform(o.comparison_steps));
  EvolutionSpec b = a;
  b.u0 = 0.6 * a.u0;
  a.forcing = ForcingSpec::constant(1.0);
  b.forcing = ForcingSpec::separable({0.0, 0.5}, {0.5, -0.5}, make_profile(a.mesh, ProfileSpec::named("parabola")));
  if (lipschitz) {
    a.reaction.f2_kind = F2Kind::sin_ratio;
    a.reaction.lambda = o.sin_lambda;
    b.reaction = a.reaction;
  }
  const ComparisonReport r = comparison_pair(a, b, o.comparison_tol);
  const std::string tag = lipschitz ? "comparison_k05" : "comparison_k0";
  Check c(tag + ".defect", r.tolerance);
  if (!r.message.empty()) {
    c.fail(r.message);
    return {c};
  }
  for (double d : r.defect) c.observe(d);
  c.detail = "K=" + fmt(r.K) + " scale=" + fmt(r.scale);
  std::vector<Check> out{c};
  if (!lipschitz) {
    // ordered data, K = 0: order preserved at every step
    Check ord(tag + ".order_preserved", 0.5, false);
    ord.observe(r.ordered ? 1.0 : 0.0);
    out.push_back(ord);
  }
  return out;
}

inline std::vector<Check> scenario_extinction(const ParabolicOptions& o) {
  const EvolutionSpec s = sin_spec(o, 2.0, 2.0, o.extinction_T, StepPolicy::uniform(o.extinction_steps));
  EvolutionSpec h = s;
  h.policy = StepPolicy::uniform(2 * o.extinction_steps);
  Check found("extinction.detected", 0.5, false);
  Check drift("extinction.halving_drift", o.extinction_drift);
  const Trajectory a = evolve(s);
  const Trajectory b = evolve(h);
  require_complete(a, "extinction");
  require_complete(b, "extinction (halved step)");
  found.observe(a.extinction_time ? 1.0 : 0.0);
  found.observe(b.extinction_time ? 1.0 : 0.0);
  if (a.extinction_time && b.extinction_time) {
    drift.observe(std::abs(*a.extinction_time - *b.extinction_time) / *b.extinction_time);
    drift.detail = "T_e=" + fmt(*a.extinction_time) + " (dt), " + fmt(*b.extinction_time) + " (dt/2)";
  } else {
    drift.fail("no extinction detected");
  }
  return {found, drift};
}

inline std::vector<Check> scenario_decay(const ParabolicOptions& o) {
  const double p = 3.0;
  const double q = 1.2;
  const EvolutionSpec s = sin_spec(o, p, q, o.decay_T, StepPolicy::geometric(o.decay_steps, o.decay_growth));
  const Trajectory tr = evolve(s);
  require_complete(tr, "decay");
  Check pos("decay.min_norm_positive", 0.0, false);
  double mn = std::numeric_limits<double>::infinity();
  for (double x : tr.l2_w) mn = std::min(mn, x);
  pos.observe(mn > 0.0 ? mn : -1.0);
  Check none("decay.no_extinction", 0.5, false);
  none.observe(tr.extinction_time ? 0.0 : 1.0);
  const double bound = (q - 1.0) / (p + q - 2.0);
  Check alpha("decay.exponent", bound + o.decay_slack);
  alpha.observe(fit_decay_exponent(tr, o.decay_t_lo, o.decay_T));
  alpha.detail = "window [" + fmt(o.decay_t_lo) + ", " + fmt(o.decay_T) + "]";
  return {pos, none, alpha};
}

/// Unforced flows: |w| and J nonincreasing, max w nonincreasing.
inline std::vector<Check> scenario_dissipation(const ParabolicOptions& o) {
  Check l2("dissipation.l2_increase", o.dissipation_tol);
  Check en("dissipation.energy_increase", o.dissipation_tol);
  Check mx("dissipation.max_increase", o.bound_tol);
  const std::pair<double, double> pqs[] = {{2.0, 2.0}, {2.0, 1.5}, {3.0, 1.2}};
  for (const auto& [p, q] : pqs) {
    const Trajectory tr = evolve(sin_spec(o, p, q, 0.5, StepPolicy::uniform(100)));
    require_complete(tr, "dissipation");
    const double s2 = std::max(1.0, tr.l2_w.front());
    const double sj = std::max(1.0, tr.j0q.front());
    for (std::size_t k = 1; k < tr.size(); ++k) {
      l2.observe((tr.l2_w[k] - tr.l2_w[k - 1]) / s2);
      en.observe((tr.j0q[k] - tr.j0q[k - 1]) / sj);
      mx.observe(max_value(tr.w[k]) - max_value(tr.w[k - 1]));
    }
  }
  return {l2, en, mx};
}

/// Error of w(T) against the Richardson limit 2 w_{8N} - w_{4N}, for N and 2N.
inline std::vector<Check> scenario_first_order(const ParabolicOptions& o) {
  const int n0 = o.halving_steps;
  const auto final_w = [&](int steps) {
    const Trajectory tr = evolve(sin_spec(o, 2.0, 2.0, o.halving_T, StepPolicy::uniform(steps)));
    require_complete(tr, "first_order");
    return tr.w.back();
  };
  std::vector<Field> w(4, Field(Mesh::interval(1.0, o.n)));
  parallel_for(4, [&](std::size_t i) { w[i] = final_w(n0 << i); });
  const Field ref = 2.0 * w[3] - w[2];
  const double e1 = l2_norm(w[0] - ref);
  const double e2 = l2_norm(w[1] - ref);
  Check lo("first_order.ratio_min", o.halving_lo, false);
  Check hi("first_order.ratio_max", o.halving_hi);
  const double ratio = e1 / e2;
  lo.observe(ratio);
  hi.observe(ratio);
  lo.detail = "errors " + fmt(e1) + ", " + fmt(e2);
  return {lo, hi};
}

}  // namespace detail

inline SuiteReport suite_parabolic(const std::string& pack, const ParabolicOptions& o = {}) {
  const std::vector<std::string> names = parabolic_scenarios(pack);
  std::vector<std::vector<Check>> results(names.size());
  parallel_for(names.size(), [&](std::size_t i) {
    const std::string& name = names[i];
    try {
      if (name == "comparison_k0") results[i] = detail::scenario_comparison(o, false);
      else if (name == "comparison_k05") results[i] = detail::scenario_comparison(o, true);
      else if (name == "extinction") results[i] = detail::scenario_extinction(o);
      else if (name == "decay") results[i] = detail::scenario_decay(o);
      else if (name == "dissipation") results[i] = detail::scenario_dissipation(o);
      else if (name == "first_order") results[i] = detail::scenario_first_order(o);
    } catch (const std::exception& e) {
      Check c(name + ".run", 0.0);
      c.fail(e.what());
      results[i] = {c};
    }
  });
  SuiteReport rep;
  rep.suite = "parabolic";
  rep.param("pack", pack);
  rep.param("n", o.n);
  for (auto& r : results)
    for (auto& c : r) rep.checks.push_back(std::move(c));
  return rep;
}

}  // namespace subflow
