#pragma once

// Command implementations behind tools/subflow. Each command returns the
// process exit code:
//   0 success, 1 configuration error, 2 non-convergence or failed suite,
//   3 unstable explicit step (dtau*K >= 1).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "subflow/config.hpp"
#include "subflow/errors.hpp"
#include "subflow/evolve.hpp"
#include "subflow/io.hpp"
#include "subflow/resolvent.hpp"
#include "subflow/verify.hpp"

namespace subflow::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_failure = 2, exit_unstable = 3 };

struct Options {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;  // key=value, dotted keys
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool plot = false;
};

/// File, then --set overrides, then the dedicated flags.
inline RunConfig load_config(const Options& opt) {
  json doc = opt.config_path ? read_json_file(*opt.config_path) : json::object();
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const std::string& s : opt.overrides) apply_override(doc, s);
  if (opt.seed) doc["seed"] = *opt.seed;
  if (opt.out_dir) doc["output"]["dir"] = *opt.out_dir;
  if (opt.plot) doc["output"]["plot"] = true;
  RunConfig cfg = parse_config(doc);
  // The output location does not change any result; keep it out of the hash
  // so that runs into different directories produce identical files.
  json hashed = cfg.document;
  if (hashed.contains("output")) hashed["output"].erase("dir");
  cfg.hash = config_hash(hashed);
  return cfg;
}

namespace detail {

inline std::filesystem::path prepare_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.output.dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <class T>
const T& need(const std::optional<T>& v, const char* key) {
  if (!v) throw ConfigError(std::string("missing required key '") + key + "'");
  return *v;
}

inline const json& need(const json& v, const char* key) {
  if (v.is_null()) throw ConfigError(std::string("missing required key '") + key + "'");
  return v;
}

inline std::string hash_line(const RunConfig& cfg) { return "subflow config_hash=" + cfg.hash; }

inline json diagnostics_json(const SolveDiagnostics& d) {
  json j;
  j["iterations"] = d.iterations;
  j["converged"] = d.converged;
  j["projected_gradient"] = d.projected_gradient;
  j["step_w"] = std::isfinite(d.step_w) ? json(d.step_w) : json(nullptr);
  j["threshold"] = d.threshold;
  j["objective"] = d.objective;
  j["escapes"] = d.escapes;
  j["message"] = d.message;
  return j;
}

}  // namespace detail

/// Solves one resolvent problem for the datum and writes w.csv, v.csv and
/// diagnostics.json.
inline int cmd_resolvent(const RunConfig& cfg, std::ostream& out) {
  const Mesh& mesh = detail::need(cfg.mesh, "mesh");
  const double p = detail::need(cfg.p, "p");
  const double q = detail::need(cfg.q, "q");
  const double mu = detail::need(cfg.mu, "mu");
  const json& datum = detail::need(cfg.datum, "datum");

  std::optional<StepObjective> obj;
  try {
    const Field g = resolve_profile(datum, mesh, cfg.seed, "datum");
    obj.emplace(g, p, q, mu, resolve_reaction(cfg.reaction, mesh, cfg.seed));
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (obj->reaction.f2_kind != F2Kind::none)
    throw ConfigError("reaction.f2 is explicit in time and has no meaning for a single resolvent");

  const ResolventResult r = solve_resolvent(*obj, cfg.solver);
  const auto dir = detail::prepare_dir(cfg);

  CsvTable wt = field_table({{"w", &r.w}});
  wt.comment(detail::hash_line(cfg));
  write_text_file(dir / "w.csv", wt.str());
  CsvTable vt = field_table({{"v", &r.v}});
  vt.comment(detail::hash_line(cfg));
  write_text_file(dir / "v.csv", vt.str());

  json diag = detail::diagnostics_json(r.diagnostics);
  diag["config_hash"] = cfg.hash;
  diag["residual"] = residual_check(r.w, *obj);
  diag["max_w"] = max_value(r.w);
  diag["max_datum_positive_part"] = max_value(positive_part(obj->g));
  if (!obj->reaction.has_f1()) diag["maximum_bound_holds"] = maximum_bound_check(r.w, obj->g);
  write_text_file(dir / "diagnostics.json", diag.dump(2) + "\n");

  out << "resolvent: " << (r.diagnostics.converged ? "converged" : "NOT converged") << " in "
      << r.diagnostics.iterations << " iterations";
  if (!r.diagnostics.message.empty()) out << " (" << r.diagnostics.message << ")";
  out << ", max w = " << max_value(r.w) << ", output in " << dir.string() << "\n";
  return r.diagnostics.converged ? exit_ok : exit_failure;
}

inline EvolutionSpec build_evolution(const RunConfig& cfg) {
  const Mesh& mesh = detail::need(cfg.mesh, "mesh");
  const double p = detail::need(cfg.p, "p");
  const double q = detail::need(cfg.q, "q");
  const json& u0 = detail::need(cfg.u0, "u0");
  const double T = detail::need(cfg.T, "time.T");
  if (!cfg.has_steps) throw ConfigError("missing required key 'time.steps'");
  try {
    EvolutionSpec spec(mesh, p, q, resolve_profile(u0, mesh, cfg.seed, "u0"));
    spec.forcing = resolve_forcing(cfg.forcing, mesh, cfg.seed);
    spec.reaction = resolve_reaction(cfg.reaction, mesh, cfg.seed);
    spec.T = T;
    spec.policy = cfg.policy;
    spec.solver = cfg.solver;
    return spec;
  } catch (const StabilityError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
}

/// Runs the time stepper and writes trajectory.csv, snapshot CSVs,
/// summary.json and, with output.plot, norms.svg.
inline int cmd_evolve(const RunConfig& cfg, std::ostream& out) {
  const EvolutionSpec spec = build_evolution(cfg);
  double K = 0.0;
  try {
    K = spec.validate();
  } catch (const StabilityError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  const Trajectory tr = evolve(spec);
  const auto dir = detail::prepare_dir(cfg);

  CsvTable t({"t", "l2_w", "sup_u", "j0q", "extinct_flag"});
  t.comment(detail::hash_line(cfg));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const bool extinct = tr.extinction_time && tr.t[k] >= *tr.extinction_time;
    t.row({tr.t[k], tr.l2_w[k], tr.sup_u[k], tr.j0q[k], extinct ? 1.0 : 0.0});
  }
  write_text_file(dir / "trajectory.csv", t.str());

  json snaps = json::array();
  for (std::size_t i = 0; i < cfg.output.snapshots.size(); ++i) {
    const double want = cfg.output.snapshots[i];
    std::size_t k = 0;
    while (k + 1 < tr.size() && tr.t[k] < want * (1.0 - 1e-12)) ++k;
    const Field u = power(tr.w[k], 1.0 / spec.q);
    CsvTable s = field_table({{"w", &tr.w[k]}, {"u", &u}});
    s.comment(detail::hash_line(cfg));
    s.comment("t=" + fmt17(tr.t[k]) + " requested=" + fmt17(want));
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", i);
    write_text_file(dir / name, s.str());
    snaps.push_back({{"file", name}, {"t", tr.t[k]}, {"requested", want}});
  }

  if (cfg.output.plot) {
    const std::vector<SvgSeries> series{{"|w|_2", tr.t, tr.l2_w}, {"sup u", tr.t, tr.sup_u}};
    write_text_file(dir / "norms.svg", svg_line_plot(series, "norms", cfg.output.loglog, detail::hash_line(cfg)));
  }

  int max_iters = 0;
  for (const StepRecord& s : tr.steps) max_iters = std::max(max_iters, s.iterations);
  json summary;
  summary["config_hash"] = cfg.hash;
  summary["complete"] = tr.complete;
  summary["message"] = tr.message;
  summary["steps"] = tr.steps.size();
  summary["max_solver_iterations"] = max_iters;
  summary["diffusion_class"] = to_string(spec.diffusion());
  summary["K"] = K;
  summary["extinction_time"] = tr.extinction_time ? json(*tr.extinction_time) : json(nullptr);
  summary["snapshots"] = snaps;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");

  out << "evolve: " << tr.steps.size() << " steps to t=" << tr.t.back() << " (" << to_string(spec.diffusion())
      << " diffusion)";
  if (tr.extinction_time) out << ", extinct from t=" << *tr.extinction_time;
  if (!tr.complete) out << ", STOPPED: " << tr.message;
  out << ", output in " << dir.string() << "\n";
  return tr.complete ? exit_ok : exit_failure;
}

// --------------------------------------------------------------- verify

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"contraction", "oracle",    "boundary",  "homogeneity",
                                              "convexity",   "gradients", "parabolic", "all"};
  return names;
}

namespace detail {

/// Strict reader for one verify.<suite> section.
class SuiteSection {
 public:
  SuiteSection(const json& verify, const std::string& suite, const RunConfig& cfg)
      : empty_(json::object()), cfg_(cfg),
        reader_(verify.contains(suite) ? verify.at(suite) : empty_, "verify." + suite) {}

  double number(const char* k, double d) { return reader_.number(k, d); }
  int integer(const char* k, int d) { return reader_.integer(k, d); }
  std::string string(const char* k, const std::string& d) { return reader_.string(k, d); }
  std::uint64_t seed(std::uint64_t d) {
    const std::uint64_t s = reader_.unsigned_integer("seed", 0);
    if (reader_.has("seed")) return s;
    return cfg_.document.contains("seed") ? cfg_.seed : d;
  }
  void finish() const { reader_.finish(); }

 private:
  json empty_;
  const RunConfig& cfg_;
  config_detail::ObjectReader reader_;
};

inline SuiteReport run_suite(const std::string& name, const RunConfig& cfg) {
  const json& v = cfg.verify;
  for (const auto& [k, val] : v.items()) {
    (void)val;
    if (std::find(suite_names().begin(), suite_names().end(), k) == suite_names().end() || k == "all")
      throw ConfigError("unknown key 'verify." + k + "'");
  }
  SuiteSection s(v, name, cfg);
  SuiteReport rep;
  if (name == "contraction") {
    ContractionOptions o;
    o.p = s.number("p", o.p);
    o.q = s.number("q", o.q);
    o.mu = s.number("mu", o.mu);
    o.n = s.integer("n", o.n);
    o.trials = s.integer("trials", o.trials);
    o.slack = s.number("slack", o.slack);
    o.bound_tol = s.number("bound_tol", o.bound_tol);
    o.seed = s.seed(o.seed);
    o.solver = cfg.solver;
    s.finish();
    rep = suite_contraction(o);
  } else if (name == "oracle") {
    OracleOptions o;
    o.mu = s.number("mu", o.mu);
    o.trials = s.integer("trials", o.trials);
    o.tol = s.number("tol", o.tol);
    o.seed = s.seed(o.seed);
    o.solver = cfg.solver;
    s.finish();
    rep = suite_oracle(o);
  } else if (name == "boundary") {
    BoundaryOptions o;
    o.p = s.number("p", o.p);
    o.q = s.number("q", o.q);
    o.mu = s.number("mu", o.mu);
    o.h = s.number("h", o.h);
    o.n = s.integer("n", o.n);
    o.band = s.number("band", o.band);
    o.slack = s.number("slack", o.slack);
    o.solver = cfg.solver;
    s.finish();
    rep = suite_boundary(o);
  } else if (name == "homogeneity") {
    HomogeneityOptions o;
    o.p = s.number("p", o.p);
    o.q = s.number("q", o.q);
    o.n = s.integer("n", o.n);
    o.trials = s.integer("trials", o.trials);
    o.tol = s.number("tol", o.tol);
    o.seed = s.seed(o.seed);
    s.finish();
    rep = suite_homogeneity(o);
  } else if (name == "convexity") {
    ConvexityOptions o;
    o.p = s.number("p", o.p);
    o.q = s.number("q", o.q);
    o.n = s.integer("n", o.n);
    o.trials = s.integer("trials", o.trials);
    o.tol = s.number("tol", o.tol);
    o.seed = s.seed(o.seed);
    s.finish();
    rep = suite_convexity_picone(o);
  } else if (name == "gradients") {
    GradientOptions o;
    o.n = s.integer("n", o.n);
    o.trials = s.integer("trials", o.trials);
    o.tol = s.number("tol", o.tol);
    o.seed = s.seed(o.seed);
    s.finish();
    rep = suite_gradients(o);
  } else if (name == "parabolic") {
    ParabolicOptions o;
    const std::string pack = s.string("pack", "default");
    o.n = s.integer("n", o.n);
    o.comparison_tol = s.number("comparison_tol", o.comparison_tol);
    o.extinction_drift = s.number("extinction_drift", o.extinction_drift);
    o.decay_slack = s.number("decay_slack", o.decay_slack);
    o.decay_t_lo = s.number("decay_t_lo", o.decay_t_lo);
    o.solver = cfg.solver;
    s.finish();
    rep = suite_parabolic(pack, o);
  }
  return rep;
}

}  // namespace detail

/// Runs one suite (or "all"), writes report.json and prints the aligned
/// text report.
inline int cmd_verify(const std::string& suite, const RunConfig& cfg, std::ostream& out) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown suite '" + suite + "' (expected one of " + list + ")");
  }
  std::vector<SuiteReport> reports;
  try {
    if (suite == "all") {
      for (const auto& n : names)
        if (n != "all") reports.push_back(detail::run_suite(n, cfg));
    } else {
      reports.push_back(detail::run_suite(suite, cfg));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  bool pass = true;
  json doc;
  doc["config_hash"] = cfg.hash;
  doc["suite"] = suite;
  doc["reports"] = json::array();
  for (const SuiteReport& r : reports) {
    pass = pass && r.pass();
    doc["reports"].push_back(to_json(r));
    out << format_report(r);
  }
  doc["pass"] = pass;
  const auto dir = detail::prepare_dir(cfg);
  write_text_file(dir / "report.json", doc.dump(2) + "\n");
  out << "verify " << suite << ": " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? exit_ok : exit_failure;
}

/// Loads the configuration and dispatches; maps exceptions to exit codes.
inline int run(const std::string& command, const std::string& suite, const Options& opt, std::ostream& out,
               std::ostream& err) {
  try {
    const RunConfig cfg = load_config(opt);
    if (command == "resolvent") return cmd_resolvent(cfg, out);
    if (command == "evolve") return cmd_evolve(cfg, out);
    if (command == "verify") return cmd_verify(suite, cfg, out);
    err << "error: unknown command '" << command << "'\n";
    return exit_config;
  } catch (const StabilityError& e) {
    err << "error: " << e.what() << "\n";
    return exit_unstable;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace subflow::cli
