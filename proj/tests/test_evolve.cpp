#include <cmath>

#include "catch_amalgamated.hpp"
#include "subflow/evolve.hpp"
#include "subflow/profiles.hpp"

using namespace subflow;
using Catch::Approx;

namespace {

EvolutionSpec sin_spec(int n, double p, double q, double T, int steps) {
  const Mesh m = Mesh::interval(1.0, n);
  EvolutionSpec s(m, p, q, make_profile(m, ProfileSpec::named("sin")));
  s.T = T;
  s.policy = StepPolicy::uniform(steps);
  return s;
}

}  // namespace

TEST_CASE("zero data stays zero") {
  const Mesh m = Mesh::interval(1.0, 16);
  EvolutionSpec s(m, 3, 1.5, Field(m));
  s.reaction.f1_terms.push_back({Field(m, -1.0), 3.0});  // f1(x,0) = 0
  s.T = 0.5;
  s.policy = StepPolicy::uniform(10);
  const Trajectory tr = evolve(s);
  REQUIRE(tr.complete);
  REQUIRE(tr.size() == 11);
  for (const Field& w : tr.w)
    for (double x : w) CHECK(x == 0.0);
  REQUIRE(detect_extinction(tr).has_value());
  CHECK(*detect_extinction(tr) == 0.0);
}

TEST_CASE("dissipation without forcing") {
  for (auto [p, q] : {std::pair{2.0, 2.0}, {2.0, 1.5}, {3.0, 1.2}}) {
    const Trajectory tr = evolve(sin_spec(64, p, q, 0.3, 60));
    REQUIRE(tr.complete);
    CHECK(tr.t.back() == 0.3);
    for (std::size_t k = 1; k < tr.size(); ++k) {
      CHECK(tr.l2_w[k] <= tr.l2_w[k - 1] + 1e-12);
      CHECK(tr.j0q[k] <= tr.j0q[k - 1] + 1e-10 * std::max(1.0, tr.j0q[0]));
      for (double x : tr.w[k]) CHECK(x >= 0.0);
    }
  }
}

TEST_CASE("fast diffusion reaches extinction") {
  const Trajectory tr = evolve(sin_spec(64, 2, 2, 1.0, 100));
  REQUIRE(tr.complete);
  const auto te = detect_extinction(tr);
  REQUIRE(te.has_value());
  CHECK(*te > 0.0);
  CHECK(*te < 1.0);
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.t[k] >= *te) CHECK(sup_norm(tr.w[k]) <= 1e-12);
}

TEST_CASE("slow diffusion keeps positive norm") {
  const Trajectory tr = evolve(sin_spec(32, 3, 1.2, 5.0, 50));
  REQUIRE(tr.complete);
  CHECK_FALSE(detect_extinction(tr).has_value());
  for (double n : tr.l2_w) CHECK(n > 0.0);
}

TEST_CASE("diffusion classes") {
  CHECK(diffusion_class(2, 2) == DiffusionClass::fast);
  CHECK(diffusion_class(3, 1.2) == DiffusionClass::slow);
  CHECK(diffusion_class(3, 1.5) == DiffusionClass::borderline);
}

TEST_CASE("stability guard") {
  EvolutionSpec s = sin_spec(16, 2, 2, 1.0, 2);
  s.reaction.f2_kind = F2Kind::sin_ratio;
  s.reaction.lambda = 5.0;
  CHECK_THROWS_AS(s.validate(), StabilityError);
  CHECK_THROWS_AS(evolve(s), StabilityError);
  s.policy = StepPolicy::uniform(20);
  CHECK(s.validate() == 5.0);
}

TEST_CASE("step grids") {
  const auto u = StepPolicy::uniform(4).grid(2.0);
  REQUIRE(u.size() == 5);
  CHECK(u[0] == 0.0);
  CHECK(u[2] == Approx(1.0));
  CHECK(u[4] == 2.0);

  const auto g = StepPolicy::geometric(10, 1.1).grid(3.0);
  REQUIRE(g.size() == 11);
  CHECK(g.back() == 3.0);
  for (std::size_t k = 2; k < g.size(); ++k)
    CHECK((g[k] - g[k - 1]) / (g[k - 1] - g[k - 2]) == Approx(1.1).epsilon(1e-9));

  CHECK_THROWS_AS(StepPolicy::uniform(0).validate(), ValidationError);
  CHECK_THROWS_AS(StepPolicy::geometric(5, 0.0).validate(), ValidationError);
  CHECK_NOTHROW(StepPolicy::geometric(5, 0.5).validate());
}

TEST_CASE("forcing schedules") {
  const Mesh m = Mesh::interval(1.0, 4);
  const ForcingSpec f = ForcingSpec::separable({0.0, 0.5}, {2.0, -1.0}, Field(m, 3.0));
  CHECK_NOTHROW(f.validate(m));
  CHECK(f.phi(0.2) == 2.0);
  CHECK(f.phi(0.5) == -1.0);
  CHECK(f.phi(7.0) == -1.0);
  CHECK(f.at(m, 0.7)[0] == -3.0);
  CHECK(ForcingSpec::constant(0.0).is_zero());
  CHECK(ForcingSpec::constant(1.5).at(m, 0.3)[2] == 1.5);

  CHECK_THROWS_AS(ForcingSpec::separable({0.1, 0.5}, {1, 1}, Field(m)).validate(m), ValidationError);
  CHECK_THROWS_AS(ForcingSpec::separable({0.0, 0.0}, {1, 1}, Field(m)).validate(m), ValidationError);
  CHECK_THROWS_AS(ForcingSpec::separable({0.0}, {1}, Field(Mesh::interval(1.0, 5))).validate(m), MeshMismatch);
}

TEST_CASE("constant forcing drives toward the stationary state") {
  const Mesh m = Mesh::interval(1.0, 24);
  EvolutionSpec s(m, 2, 1.5, Field(m));
  s.forcing = ForcingSpec::constant(1.0);
  s.T = 2.0;
  s.policy = StepPolicy::uniform(40);
  const Trajectory tr = evolve(s);
  REQUIRE(tr.complete);
  CHECK(tr.l2_w.back() > 0.0);
  // increments shrink as the flow settles
  const double early = l2_norm(tr.w[2] - tr.w[1]);
  const double late = l2_norm(tr.w[40] - tr.w[39]);
  CHECK(late < early);
}

TEST_CASE("comparison of identical and ordered pairs") {
  EvolutionSpec a = sin_spec(32, 2, 1.5, 0.5, 50);
  const ComparisonReport same = comparison_pair(a, a);
  CHECK(same.pass);
  CHECK(same.max_defect <= 0.0);

  EvolutionSpec b = a;
  b.u0 = 0.5 * a.u0;
  const ComparisonReport ord = comparison_pair(a, b);
  CHECK(ord.pass);
  CHECK(ord.ordered);

  EvolutionSpec c = a;
  c.q = 1.6;
  CHECK_THROWS_AS(comparison_pair(a, c), ValidationError);
}

TEST_CASE("evolution is reproducible") {
  const Mesh m = Mesh::interval(1.0, 20);
  ProfileSpec ps = ProfileSpec::named("random", 0.5, 0.5);
  ps.seed = 99;
  EvolutionSpec s(m, 3, 1.2, make_profile(m, ps));
  s.T = 0.2;
  s.policy = StepPolicy::uniform(10);
  const Trajectory a = evolve(s), b = evolve(s);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.w[k] == b.w[k]);
}
