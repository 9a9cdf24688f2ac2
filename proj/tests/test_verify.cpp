#include <cmath>

#include "catch_amalgamated.hpp"
#include "subflow/parallel.hpp"
#include "subflow/profiles.hpp"
#include "subflow/verify.hpp"

using namespace subflow;
using Catch::Approx;

TEST_CASE("check bookkeeping") {
  Check c("x", 1.0);
  CHECK_FALSE(c.pass());  // no samples
  c.observe(0.5);
  c.observe(0.9);
  CHECK(c.pass());
  CHECK(c.worst == 0.9);
  CHECK(c.margin() == Approx(0.1));
  c.observe(NAN);
  CHECK_FALSE(c.pass());

  Check lower("y", 2.0, false);
  lower.observe(3.0);
  lower.observe(2.5);
  CHECK(lower.pass());
  CHECK(lower.margin() == Approx(0.5));
  lower.fail("solver");
  CHECK_FALSE(lower.pass());
  CHECK(lower.detail == "solver");
}

TEST_CASE("decay exponent fits") {
  std::vector<double> t, flat, pw;
  for (int i = 1; i <= 60; ++i) {
    t.push_back(i);
    flat.push_back(3.0);
    pw.push_back(2.0 * std::pow(i, -0.09));
  }
  CHECK(fit_decay_exponent(t, flat, 1, 60) == Approx(0.0).margin(1e-12));
  CHECK(fit_decay_exponent(t, pw, 5, 50) == Approx(0.09).margin(1e-6));
  std::vector<double> dead = pw;
  dead[30] = 0.0;
  CHECK_THROWS_AS(fit_decay_exponent(t, dead, 5, 50), ValidationError);
}

TEST_CASE("boundary exponent fits") {
  const Mesh m = Mesh::interval(1.0, 199);
  const Field d = boundary_distance(m);
  CHECK(fit_boundary_exponent(d, 0.1) == Approx(1.0).margin(1e-12));
  CHECK(fit_boundary_exponent(power(d, 2.0), 0.1) == Approx(2.0).margin(1e-6));
  Field z = d;
  z[2] = 0.0;
  CHECK_THROWS_AS(fit_boundary_exponent(z, 0.1), ValidationError);
  CHECK_THROWS_AS(fit_boundary_exponent(d, 0.01), ValidationError);  // too few band nodes
}

TEST_CASE("profiles") {
  const Mesh m = Mesh::interval(1.0, 9);
  const Field s = make_profile(m, ProfileSpec::named("sin"));
  CHECK(s[4] == Approx(1.0));
  CHECK(s.is_nonnegative());
  const Field par = make_profile(m, ProfileSpec::named("parabola", 2.0, 1.0));
  CHECK(par[4] == Approx(3.0));
  ProfileSpec r = ProfileSpec::named("random");
  r.seed = 5;
  const Field a = make_profile(m, r), b = make_profile(m, r);
  CHECK(a == b);
  r.seed = 6;
  CHECK_FALSE(make_profile(m, r) == a);
  CHECK(is_profile_name("distance"));
  CHECK_FALSE(is_profile_name("gauss"));
}

TEST_CASE("parallel loop runs every index and rethrows") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 3) throw ValidationError("boom");
                  }),
                  ValidationError);
  CHECK(max_threads() >= 1);
}

TEST_CASE("small suites pass") {
  ContractionOptions c;
  c.n = 12;
  c.trials = 5;
  CHECK(suite_contraction(c).pass());

  HomogeneityOptions h;
  h.trials = 3;
  CHECK(suite_homogeneity(h).pass());
  h.q = h.p;  // theta = 0
  CHECK(suite_homogeneity(h).pass());

  GradientOptions g;
  g.trials = 1;
  CHECK(suite_gradients(g).pass());

  ConvexityOptions cv;
  cv.trials = 20;
  CHECK(suite_convexity_picone(cv).pass());
}

TEST_CASE("zero tolerance makes a suite fail") {
  HomogeneityOptions h;
  h.trials = 2;
  h.tol = 0.0;
  const SuiteReport r = suite_homogeneity(h);
  CHECK_FALSE(r.pass());
  CHECK(r.worst_margin() < 0.0);
}

TEST_CASE("parabolic packs") {
  const SuiteReport empty = suite_parabolic("empty");
  CHECK(empty.checks.empty());
  CHECK(empty.pass());
  CHECK_THROWS_AS(suite_parabolic("nope"), ValidationError);
  CHECK(parabolic_scenarios("default").size() == 6);
  CHECK(parabolic_scenarios("extinction") == std::vector<std::string>{"extinction"});

  ParabolicOptions o;
  o.n = 32;
  o.comparison_steps = 50;
  const SuiteReport k0 = suite_parabolic("comparison_k0", o);
  CHECK(k0.pass());
}
