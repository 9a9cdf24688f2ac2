#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "subflow/energy.hpp"

using namespace subflow;
using Catch::Approx;

namespace {

Field random_nonneg(const Mesh& m, std::mt19937_64& rng, double zero_fraction = 0.2) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> v(m.size());
  for (double& x : v) x = U(rng) < zero_fraction ? 0.0 : 2.0 * U(rng);
  return Field(m, v);
}

}  // namespace

TEST_CASE("j0q hand values") {
  const Mesh m = Mesh::interval(1.0, 1);
  CHECK(j0q(Field(m), 2, 2) == 0.0);
  CHECK(j0q(Field(m, 1.0), 2, 2) == Approx(4.0));
  CHECK(std::isinf(j0q(Field(Mesh::interval(1.0, 2), {1.0, -1e-9}), 3, 1.5)));
}

TEST_CASE("j0q is q times the p-energy of v") {
  std::mt19937_64 rng(31);
  const Mesh m = Mesh::rectangle(1.0, 1.0, 6, 6);
  for (auto [p, q] : {std::pair{2.0, 1.5}, {3.0, 1.2}, {3.0, 3.0}}) {
    const Field v = random_nonneg(m, rng);
    CHECK(j0q(power(v, q), p, q) == Approx(q * p_energy(v, PExponent(p))).epsilon(1e-13));
  }
}

TEST_CASE("objective hand values") {
  const Mesh m = Mesh::interval(1.0, 1);
  const StepObjective zero(Field(m), 2, 2, 1.0);
  CHECK(objective_value(Field(m), zero) == 0.0);

  const Mesh m3 = Mesh::interval(1.0, 3);
  const Field g(m3, {1.0, -2.0, 0.5});
  const StepObjective pure(g, 3, 1.5, 0.1);
  CHECK(objective_value(Field(m3), pure) == Approx(0.5 * 0.25 * (1.0 + 4.0 + 0.25)));

  const StepObjective single(Field(m, 4.0), 2, 2, 1.0);
  CHECK(objective_value(Field(m, 1.0), single) == Approx(6.25));
  CHECK(objective_gradient(Field(m, 1.0), single)[0] == Approx(5.0));
  for (double x : objective_gradient(Field(m), single)) CHECK(x == 0.0);
}

TEST_CASE("step objective rejects bad parameters") {
  const Mesh m = Mesh::interval(1.0, 3);
  const Field g(m, 1.0);
  CHECK_THROWS_AS(StepObjective(g, 3, 1.0, 0.1), ValidationError);
  CHECK_THROWS_AS(StepObjective(g, 2, 2.5, 0.1), ValidationError);
  CHECK_THROWS_AS(StepObjective(g, 2, 1.5, 0.0), ValidationError);
  CHECK_THROWS_AS(StepObjective(g, 1.0, 1.0, 0.1), ValidationError);
  const StepObjective ok(g, 2, 1.5, 0.1);
  CHECK_THROWS_AS(objective_value(Field(m, {1.0, -1.0, 0.0}), ok), ValidationError);

  ReactionSpec r;
  r.f1_terms.push_back({Field(Mesh::interval(1.0, 4), 1.0), 1.5});
  CHECK_THROWS_AS(StepObjective(g, 2, 1.5, 0.1, r), MeshMismatch);
}

TEST_CASE("objective gradient matches central differences") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> U(0.2, 1.5);
  const Mesh m = Mesh::interval(1.0, 10);
  ReactionSpec r;
  r.f1_terms.push_back({Field(m, 0.8), 1.5});
  r.f1_terms.push_back({Field(m, -1.0), 3.0});
  for (bool with_f1 : {false, true}) {
    std::vector<double> gv(m.size()), vv(m.size());
    for (double& x : gv) x = U(rng) - 0.5;
    for (double& x : vv) x = U(rng);
    const StepObjective obj(Field(m, gv), 3, 1.5, 0.07, with_f1 ? r : ReactionSpec::none());
    const Field v(m, vv);
    const Field g = objective_gradient(v, obj);
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double e = 1e-6;
      Field a = v, b = v;
      a[k] += e;
      b[k] -= e;
      const double fd = (objective_value(a, obj) - objective_value(b, obj)) / (2 * e);
      CHECK(std::abs(fd - g[k]) <= 1e-6 * std::max(std::abs(g[k]), 1e-3));
    }
  }
}

TEST_CASE("convexity gap examples") {
  std::mt19937_64 rng(33);
  const Mesh m = Mesh::interval(1.0, 16);
  const Field a = random_nonneg(m, rng, 0.0);
  CHECK(convexity_gap(a, a, 0.5, 3, 1.5) == Approx(0.0).margin(1e-13));
  const double scale = j0q(a, 3, 1.5) + j0q(2.0 * a, 3, 1.5);
  CHECK(convexity_gap(a, 2.0 * a, 0.5, 3, 1.5) >= -1e-12 * scale);
  CHECK_THROWS_AS(convexity_gap(a, a, 1.0, 3, 1.5), ValidationError);
}

TEST_CASE("j0q midpoint convexity and submodularity") {
  std::mt19937_64 rng(34);
  const Mesh m = Mesh::interval(1.0, 24);
  const std::pair<double, double> pairs[] = {{2, 1.5}, {2, 2}, {3, 1.2}, {3, 2}, {3, 3}, {1.5, 1.2}};
  for (auto [p, q] : pairs) {
    int convex_fail = 0, submod_fail = 0;
    for (int t = 0; t < 200; ++t) {
      const Field a = random_nonneg(m, rng), b = random_nonneg(m, rng);
      const double ja = j0q(a, p, q), jb = j0q(b, p, q);
      const double scale = std::max(1.0, ja + jb);
      if (convexity_gap(a, b, 0.5, p, q) < -1e-12 * scale) ++convex_fail;
      if (j0q(nodal_min(a, b), p, q) + j0q(nodal_max(a, b), p, q) > ja + jb + 1e-12 * scale) ++submod_fail;
    }
    INFO("p=" << p << " q=" << q);
    CHECK(convex_fail == 0);
    CHECK(submod_fail == 0);
  }
}

TEST_CASE("picone gap examples") {
  const Mesh m = Mesh::interval(1.0, 64);
  const Field u = Field::from_function(m, [](double x, double) { return std::sin(M_PI * x); });
  const Field z = Field::from_function(m, [](double x, double) { return x * (1 - x); });
  const double p = 3, q = 1.5;
  const double eu = p_energy(u, PExponent(p));
  CHECK(picone_gap(u, u, p, q) == Approx(0.0).margin(1e-12 * eu));
  CHECK(picone_gap(u, Field(m), p, q) == Approx((p - q) * eu));
  const double scale = q * p_energy(z, PExponent(p)) + (p - q) * eu;
  CHECK(picone_gap(u, z, p, q) >= -10.0 / 64 * scale);
  CHECK_THROWS_AS(picone_gap(Field(m), z, p, q), ValidationError);
}
