#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "subflow/plap.hpp"
#include "subflow/reaction.hpp"

using namespace subflow;
using Catch::Approx;

namespace {

Field random_field(const Mesh& m, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(m.size());
  for (double& x : v) x = U(rng);
  return Field(m, v);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_CASE("p-energy hand values") {
  const Mesh m = Mesh::interval(1.0, 1);
  CHECK(p_energy(Field(m), PExponent(2)) == 0.0);
  CHECK(p_energy(Field(m, 1.0), PExponent(2)) == Approx(2.0));
  CHECK(p_energy(Field(m, 1.0), PExponent(3)) == Approx(8.0 / 3.0));
}

TEST_CASE("p-exponent range") {
  CHECK_THROWS_AS(PExponent(1.0), ValidationError);
  CHECK_THROWS_AS(PExponent(0.5), ValidationError);
  CHECK_THROWS_AS(PExponent(INFINITY), ValidationError);
  CHECK_NOTHROW(PExponent(1.0001));
}

TEST_CASE("p-Laplacian stencil values") {
  const Mesh m = Mesh::interval(1.0, 3);
  const Field v(m, {1.0, 2.0, 1.0});
  CHECK(p_energy_gradient(v, PExponent(2))[1] == Approx(8.0));
  CHECK(apply_p_laplacian(v, PExponent(2))[1] == Approx(-32.0));

  const Field lin(m, {0.25, 0.5, 0.75});
  CHECK(apply_p_laplacian(lin, PExponent(2))[0] == Approx(0.0).margin(1e-12));
  CHECK(apply_p_laplacian(lin, PExponent(2))[1] == Approx(0.0).margin(1e-12));

  const Field zero(m);
  for (double p : {1.5, 2.0, 3.0}) {
    const Field gz = p_energy_gradient(zero, PExponent(p));
    for (double x : gz) CHECK(x == 0.0);
  }
}

TEST_CASE("p-Laplacian gradient identity and homogeneity") {
  std::mt19937_64 rng(21);
  const Mesh meshes[] = {Mesh::interval(1.0, 17), Mesh::rectangle(1.0, 0.7, 5, 4)};
  for (const Mesh& m : meshes) {
    for (double p : {1.3, 2.0, 2.5, 3.0, 4.5}) {
      const Field v = random_field(m, rng, -1.0, 1.0);
      const Field g = p_energy_gradient(v, PExponent(p));
      const Field lap = apply_p_laplacian(v, PExponent(p));
      for (std::size_t k = 0; k < m.size(); ++k)
        CHECK(g[k] == Approx(-m.cell_measure() * lap[k]).epsilon(1e-13).margin(1e-14));

      const Field scaled = apply_p_laplacian(2.0 * v, PExponent(p));
      const double f = std::pow(2.0, p - 1.0);
      for (std::size_t k = 0; k < m.size(); ++k) CHECK(std::abs(scaled[k] - f * lap[k]) <= 1e-12 * std::abs(f * lap[k]) + 1e-300);
    }
  }
}

TEST_CASE("p-energy gradient matches central differences") {
  std::mt19937_64 rng(22);
  const Mesh m = Mesh::interval(1.0, 12);
  for (int t = 0; t < 5; ++t) {
    Field v = random_field(m, rng, -1.0, 1.0);
    const PExponent p(2.5);
    const Field g = p_energy_gradient(v, p);
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double e = 1e-6;
      Field a = v, b = v;
      a[k] += e;
      b[k] -= e;
      const double fd = (p_energy(a, p) - p_energy(b, p)) / (2 * e);
      CHECK(rel(fd, g[k]) <= 1e-6);
    }
  }
}

TEST_CASE("p-energy is submodular on random pairs") {
  std::mt19937_64 rng(23);
  const Mesh m = Mesh::rectangle(1.0, 1.0, 6, 5);
  for (double p : {1.5, 2.0, 3.0}) {
    for (int t = 0; t < 50; ++t) {
      const Field a = random_field(m, rng, -1, 1), b = random_field(m, rng, -1, 1);
      const PExponent pe(p);
      const double lhs = p_energy(nodal_min(a, b), pe) + p_energy(nodal_max(a, b), pe);
      const double rhs = p_energy(a, pe) + p_energy(b, pe);
      CHECK(lhs <= rhs + 1e-12 * rhs);
    }
  }
}

TEST_CASE("reaction validation") {
  const Mesh m = Mesh::interval(1.0, 4);
  const double q = 1.5;

  ReactionSpec eig;
  eig.f1_terms.push_back({Field(m, 1.0), q});
  CHECK(validate(eig, q) == 0.0);
  for (double a : a0_field(eig, m, q)) CHECK(a == 1.0);

  ReactionSpec absorb;
  absorb.f1_terms.push_back({Field(m, -2.0), 2 * q});
  absorb.f2_kind = F2Kind::sin_ratio;
  absorb.lambda = 0.5;
  CHECK(validate(absorb, q) == 0.5);
  for (double a : a0_field(absorb, m, q)) CHECK(a == 0.0);

  ReactionSpec bad;
  bad.f1_terms.push_back({Field(m, 1.0), 2 * q});
  CHECK_THROWS_AS(validate(bad, q), AdmissibilityError);

  ReactionSpec singular;
  singular.f1_terms.push_back({Field(m, 1.0), 1.2});
  CHECK_THROWS_AS(validate(singular, q), AdmissibilityError);

  // zero coefficient below q is harmless
  ReactionSpec dormant;
  dormant.f1_terms.push_back({Field(m, 0.0), 1.2});
  CHECK_NOTHROW(validate(dormant, q));

  CHECK_THROWS_AS(parse_f2_kind("cos_ratio"), AdmissibilityError);
  CHECK(parse_f2_kind("tanh_ratio") == F2Kind::tanh_ratio);
}

TEST_CASE("reaction closed forms") {
  const Mesh m = Mesh::interval(1.0, 1);
  ReactionSpec a;
  a.f1_terms.push_back({Field(m, 1.0), 2.0});  // u^(q-1) with q = 2
  CHECK(f1_potential(a, 0, 2.0) == Approx(2.0));
  CHECK(f1_potential(a, 0, 0.0) == 0.0);

  ReactionSpec b;
  b.f1_terms.push_back({Field(m, -2.0), 4.0});  // -2 u^3
  CHECK(f1_potential(b, 0, 1.0) == Approx(-0.5));
  CHECK(f1_potential(b, 0, 0.0) == 0.0);

  ReactionSpec c;
  c.f2_kind = F2Kind::constant_ratio;
  c.lambda = 3.0;
  CHECK(f2_ratio(c, 0, 0.0) == 3.0);
  CHECK(f2_ratio(c, 0, 17.0) == 3.0);
  c.f2_kind = F2Kind::sin_ratio;
  c.lambda = 0.5;
  CHECK(f2_ratio(c, 0, 0.0) == 0.0);
  c.f2_kind = F2Kind::tanh_ratio;
  c.lambda = 1.0;
  CHECK(f2_ratio(c, 0, 10.0) == Approx(0.9999999959).epsilon(1e-10));
}

TEST_CASE("reaction properties on random samples") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> U(0.0, 3.0);
  const Mesh m = Mesh::interval(1.0, 3);
  const double q = 1.4;

  ReactionSpec r;
  r.f1_terms.push_back({Field(m, {0.5, 1.0, 2.0}), q});
  r.f1_terms.push_back({Field(m, {-1.0, -0.2, 0.0}), 2.3});
  r.f1_terms.push_back({Field(m, {-0.1, -3.0, -1.0}), 3.5});
  r.f2_kind = F2Kind::sin_ratio;
  r.lambda = 0.7;
  const double K = validate(r, q);

  for (int t = 0; t < 500; ++t) {
    const std::size_t k = static_cast<std::size_t>(t % 3);
    double u1 = U(rng), u2 = U(rng);
    if (u1 > u2) std::swap(u1, u2);
    if (u1 == 0.0) continue;
    CHECK(f1_ratio(r, k, u2, q) <= f1_ratio(r, k, u1, q) + 1e-14);
    CHECK(std::abs(f2_ratio(r, k, u1) - f2_ratio(r, k, u2)) <= K * std::abs(u1 - u2) + 1e-15);

    const double v = U(rng) + 0.05, e = 1e-6 * v;
    const double fd = (f1_potential(r, k, v + e) - f1_potential(r, k, v - e)) / (2 * e);
    CHECK(rel(fd, f1_value(r, k, v)) <= 1e-8);
  }
}
