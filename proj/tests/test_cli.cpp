#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "subflow/cli.hpp"

using namespace subflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

fs::path scratch_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("subflow_cli_" + tag);
  fs::remove_all(d);
  return d;
}

Run run(const std::string& command, std::vector<std::string> sets, const fs::path& out,
        const std::string& suite = "") {
  cli::Options o;
  o.overrides = std::move(sets);
  o.out_dir = out.string();
  std::ostringstream so, se;
  const int code = cli::run(command, suite, o, so, se);
  return {code, so.str(), se.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Data rows of a CSV, comments and header dropped.
std::vector<std::vector<double>> csv_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> r;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

const std::vector<std::string> base_1d{"mesh.dim=1", "mesh.n=3", "p=2", "q=1.5", "mu=0.1"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("override parsing") {
  json doc = json::object();
  apply_override(doc, "a.b.c=3");
  apply_override(doc, "a.s=sin");
  apply_override(doc, "xs=[1,2]");
  CHECK(doc["a"]["b"]["c"] == 3);
  CHECK(doc["a"]["s"] == "sin");
  CHECK(doc["xs"].size() == 2);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
}

TEST_CASE("schema rejects unknown keys") {
  CHECK_THROWS_WITH(parse_config(json{{"bogus", 1}}), Catch::Matchers::ContainsSubstring("bogus"));
  CHECK_THROWS_WITH(parse_config(json{{"mesh", {{"dim", 1}, {"n", 4}, {"extra", 0}}}}),
                    Catch::Matchers::ContainsSubstring("mesh.extra"));
  CHECK_THROWS_AS(parse_config(json{{"solver", {{"method", "magic"}}}}), ConfigError);
  const RunConfig two = parse_config(json{{"mesh", {{"dim", 2}, {"Lx", 2.0}, {"Ly", 1.0}, {"nx", 3}, {"ny", 2}}}});
  REQUIRE(two.mesh);
  CHECK(two.mesh->size() == 6);
}

TEST_CASE("resolvent command reports the missing key") {
  const fs::path d = scratch_dir("missing");
  const Run r = run("resolvent", {"mesh.dim=1", "mesh.n=3", "p=2", "mu=0.1", "datum=1"}, d);
  CHECK(r.code == 1);
  CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("'q'"));
}

TEST_CASE("resolvent command with nonpositive datum") {
  const fs::path d = scratch_dir("neg");
  const Run r = run("resolvent", with(base_1d, {"datum=-0.5"}), d);
  REQUIRE(r.code == 0);
  for (const auto& row : csv_rows(d / "w.csv")) CHECK(row[1] == 0.0);
  CHECK(fs::exists(d / "v.csv"));
  const json diag = json::parse(slurp(d / "diagnostics.json"));
  CHECK(diag["converged"] == true);
}

TEST_CASE("resolvent command matches the oracle fixture") {
  const fs::path d = scratch_dir("fixture");
  const Run r = run("resolvent", with(base_1d, {"datum=1"}), d);
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(d / "w.csv");
  REQUIRE(rows.size() == 3);
  const double expect[] = {0.28147076682546351, 0.42432626103017212, 0.28147076682546351};
  for (int k = 0; k < 3; ++k) CHECK(std::abs(rows[k][1] - expect[k]) <= 1e-6);
  const std::string text = slurp(d / "w.csv");
  CHECK(text.rfind("# subflow config_hash=", 0) == 0);
}

TEST_CASE("config hash ignores the output directory") {
  const fs::path a = scratch_dir("hash_a"), b = scratch_dir("hash_b");
  REQUIRE(run("resolvent", with(base_1d, {"datum.profile=sin"}), a).code == 0);
  REQUIRE(run("resolvent", with(base_1d, {"datum.profile=sin"}), b).code == 0);
  CHECK(slurp(a / "w.csv") == slurp(b / "w.csv"));
  const fs::path c = scratch_dir("hash_c");
  REQUIRE(run("resolvent", with(base_1d, {"datum.profile=sin", "mu=0.2"}), c).code == 0);
  CHECK(slurp(a / "w.csv").substr(0, 40) != slurp(c / "w.csv").substr(0, 40));
}

TEST_CASE("evolve command with zero data") {
  const fs::path d = scratch_dir("zero");
  const Run r = run("evolve", {"mesh.dim=1", "mesh.n=8", "p=3", "q=1.5", "u0=0", "time.T=0.5", "time.steps=5"}, d);
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(d / "trajectory.csv");
  REQUIRE(rows.size() == 6);
  for (const auto& row : rows) {
    CHECK(row[1] == 0.0);
    CHECK(row[2] == 0.0);
  }
  const std::string head = slurp(d / "trajectory.csv");
  CHECK_THAT(head, Catch::Matchers::ContainsSubstring("t,l2_w,sup_u,j0q,extinct_flag"));
}

TEST_CASE("evolve command flags extinction and plots") {
  const fs::path d = scratch_dir("ext");
  const Run r = run("evolve",
                    {"mesh.dim=1", "mesh.n=32", "p=2", "q=2", "u0.profile=sin", "time.T=0.5", "time.steps=50",
                     "output.snapshots=[0.1,0.5]", "output.plot=true", "output.loglog=true"},
                    d);
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(d / "trajectory.csv");
  bool seen = false;
  for (const auto& row : rows) {
    if (row[4] == 1.0) seen = true;
    if (seen) CHECK(row[4] == 1.0);
  }
  CHECK(seen);
  CHECK(rows.front()[4] == 0.0);
  CHECK(fs::exists(d / "snapshot_000.csv"));
  CHECK(fs::exists(d / "snapshot_001.csv"));
  const std::string svg = slurp(d / "norms.svg");
  CHECK_THAT(svg, Catch::Matchers::ContainsSubstring("config_hash="));
  CHECK_THAT(svg, Catch::Matchers::ContainsSubstring("log-log"));
}

TEST_CASE("evolve command exit codes") {
  const fs::path d = scratch_dir("codes");
  const std::vector<std::string> base{"mesh.dim=1", "mesh.n=16", "p=2", "q=2", "u0=1", "time.T=1"};
  CHECK(run("evolve", with(base, {"time.steps=2", "reaction.f2.kind=sin_ratio", "reaction.f2.lambda=5"}), d).code ==
        3);
  CHECK(run("evolve", with(base, {"time.steps=40", "reaction.f2.kind=sin_ratio", "reaction.f2.lambda=0.5"}), d)
            .code == 0);
  CHECK(run("evolve", base, d).code == 1);  // no time.steps
  CHECK(run("evolve", with(base, {"time.steps=4", "reaction.f1=[{\"c\":1,\"s\":3}]"}), d).code == 1);
  CHECK(run("evolve", with(base, {"time.steps=4", "solver.max_iters=1", "solver.method=projected_gradient"}), d)
            .code == 2);
}

TEST_CASE("verify command exit codes") {
  const fs::path d = scratch_dir("verify");
  const Run ok = run("verify", {"verify.homogeneity.trials=3"}, d, "homogeneity");
  CHECK(ok.code == 0);
  CHECK_THAT(ok.out, Catch::Matchers::ContainsSubstring("PASS"));
  CHECK(json::parse(slurp(d / "report.json"))["pass"] == true);

  fs::remove(d / "report.json");
  const Run bad = run("verify", {"verify.homogeneity.trials=3", "verify.homogeneity.tol=0"}, d, "homogeneity");
  CHECK(bad.code == 2);
  CHECK(json::parse(slurp(d / "report.json"))["pass"] == false);

  CHECK(run("verify", {}, d, "nosuch").code == 1);
  CHECK(run("verify", {"verify.homogeneity.unknown=1"}, d, "homogeneity").code == 1);
  CHECK(run("verify", {"verify.parabolic.pack=empty"}, d, "parabolic").code == 0);
}
