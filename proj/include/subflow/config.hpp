#pragma once

// JSON run configuration: strict schema, dotted overrides, content hash.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "subflow/errors.hpp"
#include "subflow/evolve.hpp"
#include "subflow/field.hpp"
#include "subflow/mesh.hpp"
#include "subflow/profiles.hpp"
#include "subflow/reaction.hpp"
#include "subflow/resolvent.hpp"

namespace subflow {

using json = nlohmann::json;

namespace config_detail {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing required key '" + key_path(key) + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(key_path(key) + " must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

  int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(key_path(key) + " must be an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : mark(key, fallback); }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return mark(key, fallback);
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError(key_path(key) + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return mark(key, fallback);
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(key_path(key) + " must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : mark(key, fallback);
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(key_path(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const json& x : v) {
      if (!x.is_number()) throw ConfigError(key_path(key) + " must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  ObjectReader object(const std::string& key) { return ObjectReader(raw(key), key_path(key)); }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      (void)v;
      if (!seen_.count(k)) throw ConfigError("unknown key '" + key_path(k) + "'");
    }
  }

 private:
  template <class T>
  T mark(const std::string& key, T value) {
    seen_.insert(key);
    return value;
  }
  std::string where() const { return path_.empty() ? "config " : "'" + path_ + "' "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace config_detail

struct OutputConfig {
  std::string dir = "out";
  std::vector<double> snapshots;
  bool plot = false;
  bool loglog = false;
};

/// Everything a command can read from the configuration file. Sections a
/// command does not use are still schema-checked.
struct RunConfig {
  json document;  // after overrides; hashed
  std::string hash;
  std::uint64_t seed = 0;
  std::optional<Mesh> mesh;
  std::optional<double> p;
  std::optional<double> q;
  std::optional<double> mu;
  json datum;  // unresolved profile specs; need the mesh
  json u0;
  json forcing;
  json reaction;
  std::optional<double> T;
  StepPolicy policy;
  bool has_steps = false;
  SolverConfig solver;
  OutputConfig output;
  json verify = json::object();
};

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON dump.
inline std::string config_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Applies key=value with a dotted key path. The value is parsed as JSON
/// when possible (numbers, booleans, arrays, objects) and kept as a string
/// otherwise.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

namespace config_detail {

inline Mesh parse_mesh(ObjectReader r) {
  const int dim = r.integer("dim", 1);
  if (dim != 1 && dim != 2) throw ConfigError("mesh.dim must be 1 or 2");
  try {
    if (dim == 1) {
      const double L = r.number("L", 1.0);
      const int n = r.integer("n");
      r.finish();
      return Mesh::interval(L, n);
    }
    double lx, ly;
    if (r.has("Lx") || r.has("Ly")) {
      lx = r.number("Lx");
      ly = r.number("Ly");
    } else {
      lx = ly = r.number("L", 1.0);
    }
    int nx, ny;
    if (r.has("nx") || r.has("ny")) {
      nx = r.integer("nx");
      ny = r.integer("ny");
    } else {
      nx = ny = r.integer("n");
    }
    r.finish();
    return Mesh::rectangle(lx, ly, nx, ny);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("mesh: ") + e.what());
  }
}

inline SolverConfig parse_solver(ObjectReader r) {
  SolverConfig s;
  s.tol_grad_abs = r.number("tol_grad_abs", s.tol_grad_abs);
  s.tol_grad_rel = r.number("tol_grad_rel", s.tol_grad_rel);
  s.max_iters = r.integer("max_iters", s.max_iters);
  s.armijo_c = r.number("armijo_c", s.armijo_c);
  s.backtrack_factor = r.number("backtrack_factor", s.backtrack_factor);
  s.lift_factor = r.number("lift_factor", s.lift_factor);
  s.seed = r.unsigned_integer("seed", s.seed);
  try {
    s.method = parse_solver_method(r.string("method", to_string(s.method)));
    s.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  r.finish();
  return s;
}

/// Profile: a number (constant) or {"profile", "amplitude", "offset", "values", "seed"}.
inline void check_profile(const json& j, const std::string& path) {
  if (j.is_number()) return;
  ObjectReader r(j, path);
  const std::string name = r.string("profile");
  if (!is_profile_name(name)) throw ConfigError(path + ".profile: unknown profile '" + name + "'");
  r.number("amplitude", 1.0);
  r.number("offset", 0.0);
  if (name == "values") r.numbers("values");
  r.unsigned_integer("seed", 0);
  r.finish();
}

inline void check_forcing(const json& j) {
  ObjectReader r(j, "forcing");
  const std::string kind = r.string("kind", "zero");
  if (kind == "constant") {
    r.number("c");
  } else if (kind == "separable") {
    r.numbers("times");
    r.numbers("values");
    check_profile(r.raw("shape"), "forcing.shape");
  } else if (kind != "zero") {
    throw ConfigError("forcing.kind must be zero, constant or separable");
  }
  r.finish();
}

inline void check_reaction(const json& j) {
  ObjectReader r(j, "reaction");
  if (r.has("f1")) {
    const json& f1 = r.raw("f1");
    if (!f1.is_array()) throw ConfigError("reaction.f1 must be an array of {c, s} terms");
    for (std::size_t i = 0; i < f1.size(); ++i) {
      const std::string path = "reaction.f1[" + std::to_string(i) + "]";
      ObjectReader t(f1[i], path);
      check_profile(t.raw("c"), path + ".c");
      t.number("s");
      t.finish();
    }
  }
  if (r.has("f2")) {
    ObjectReader f2 = r.object("f2");
    try {
      parse_f2_kind(f2.string("kind"));
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("reaction.f2: ") + e.what());
    }
    f2.number("lambda", 0.0);
    f2.finish();
  }
  r.finish();
}

}  // namespace config_detail

/// Parses and schema-checks a configuration document.
inline RunConfig parse_config(json doc) {
  using config_detail::ObjectReader;
  RunConfig cfg;
  if (doc.is_null()) doc = json::object();
  cfg.document = doc;
  cfg.hash = config_hash(doc);
  ObjectReader r(cfg.document, "");
  cfg.seed = r.unsigned_integer("seed", 0);
  if (r.has("mesh")) cfg.mesh = config_detail::parse_mesh(r.object("mesh"));
  if (r.has("p")) cfg.p = r.number("p");
  if (r.has("q")) cfg.q = r.number("q");
  if (r.has("mu")) cfg.mu = r.number("mu");
  if (r.has("datum")) {
    cfg.datum = r.raw("datum");
    config_detail::check_profile(cfg.datum, "datum");
  }
  if (r.has("u0")) {
    cfg.u0 = r.raw("u0");
    config_detail::check_profile(cfg.u0, "u0");
  }
  if (r.has("forcing")) {
    cfg.forcing = r.raw("forcing");
    config_detail::check_forcing(cfg.forcing);
  }
  if (r.has("reaction")) {
    cfg.reaction = r.raw("reaction");
    config_detail::check_reaction(cfg.reaction);
  }
  if (r.has("time")) {
    ObjectReader t = r.object("time");
    cfg.T = t.number("T");
    if (t.has("steps")) {
      cfg.policy.steps = t.integer("steps");
      cfg.has_steps = true;
    }
    const std::string policy = t.string("policy", "uniform");
    if (policy == "uniform") {
      cfg.policy.kind = StepKind::uniform;
    } else if (policy == "geometric") {
      cfg.policy.kind = StepKind::geometric;
    } else {
      throw ConfigError("time.policy must be uniform or geometric");
    }
    cfg.policy.growth = t.number("growth", 1.0);
    t.finish();
  }
  if (r.has("solver")) cfg.solver = config_detail::parse_solver(r.object("solver"));
  if (r.has("output")) {
    ObjectReader o = r.object("output");
    cfg.output.dir = o.string("dir", cfg.output.dir);
    if (o.has("snapshots")) cfg.output.snapshots = o.numbers("snapshots");
    cfg.output.plot = o.boolean("plot", false);
    cfg.output.loglog = o.boolean("loglog", false);
    o.finish();
  }
  if (r.has("verify")) {
    cfg.verify = r.raw("verify");
    if (!cfg.verify.is_object()) throw ConfigError("verify must be an object");
  }
  r.finish();
  return cfg;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return doc;
}

// ----------------------------------------------------- field resolution

/// Builds a profile field. Random profiles without an explicit seed use
/// `default_seed`.
inline Field resolve_profile(const json& j, const Mesh& mesh, std::uint64_t default_seed, const std::string& path) {
  try {
    if (j.is_number()) return Field(mesh, j.get<double>());
    ProfileSpec s;
    s.name = j.at("profile").get<std::string>();
    s.amplitude = j.value("amplitude", 1.0);
    s.offset = j.value("offset", 0.0);
    if (j.contains("values")) s.values = j.at("values").get<std::vector<double>>();
    s.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : default_seed;
    return make_profile(mesh, s);
  } catch (const ValidationError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ForcingSpec resolve_forcing(const json& j, const Mesh& mesh, std::uint64_t seed) {
  if (j.is_null()) return ForcingSpec::zero();
  const std::string kind = j.value("kind", std::string("zero"));
  if (kind == "constant") return ForcingSpec::constant(j.at("c").get<double>());
  if (kind == "separable")
    return ForcingSpec::separable(j.at("times").get<std::vector<double>>(), j.at("values").get<std::vector<double>>(),
                                  resolve_profile(j.at("shape"), mesh, seed, "forcing.shape"));
  return ForcingSpec::zero();
}

/// Reaction catalog entry. Admissibility is checked later against q.
inline ReactionSpec resolve_reaction(const json& j, const Mesh& mesh, std::uint64_t seed) {
  ReactionSpec rs;
  if (j.is_null()) return rs;
  if (j.contains("f1")) {
    std::size_t i = 0;
    for (const json& t : j.at("f1")) {
      rs.f1_terms.push_back(
          {resolve_profile(t.at("c"), mesh, seed, "reaction.f1[" + std::to_string(i) + "].c"), t.at("s").get<double>()});
      ++i;
    }
  }
  if (j.contains("f2")) {
    rs.f2_kind = parse_f2_kind(j.at("f2").at("kind").get<std::string>());
    rs.lambda = j.at("f2").value("lambda", 0.0);
  }
  return rs;
}

}  // namespace subflow
