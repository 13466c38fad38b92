#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pfsmc/bounds.hpp"
#include "pfsmc/errors.hpp"
#include "pfsmc/extinction.hpp"

using namespace pfsmc;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec desk(char variant, std::size_t nodes = 129) {
  const Mesh m = Mesh::interval(1.0, nodes);
  ProblemSpec s;
  s.theta0 = Field::from_function(m, [](double x, double, double) { return std::cos(kPi * x); });
  s.phi0 = Field::from_function(m, [](double x, double, double) { return 0.5 * std::cos(kPi * x); });
  if (variant == 'A')
    s.variant = VariantA{1.0, Field(m, 0.2)};
  else
    s.variant = VariantB{Field(m)};
  return s;
}

Trajectory pilot(const ProblemSpec& s, double T = 1.0) {
  SimulateOptions o;
  o.T = T;
  o.dt = 1e-3;
  o.keep_snapshots = true;
  return simulate(s, o);
}

}  // namespace

TEST_CASE("structural constant") {
  CHECK(c_str(PhysParams{}) == doctest::Approx(10.0));
  PhysParams p;
  p.ell = 1e-14;
  CHECK(c_str(p) == doctest::Approx(2 * std::sqrt(6.0)));
  p.nu = 4.0;
  CHECK(c_str(p) == doctest::Approx(2 * std::sqrt(6.0) / 4.0));
}

TEST_CASE("smallness margin") {
  PhysParams p;
  p.gamma = 0.1;
  CHECK(smallness_margin(p, 0.5, 1.0) == doctest::Approx(0.5));
  CHECK(smallness_margin(p, 0.5, 1e-12) == doctest::Approx(1.0));
  PhysParams q;
  CHECK(smallness_margin(q, 0.1, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("thresholds for the nonlocal feedback") {
  const auto a = rho_t_star_A(0.0, 1.0, 1.0, 6.0);
  CHECK(a.rho_star == doctest::Approx(2.0));
  CHECK(a.t_star == doctest::Approx(1.0 / 3.0));
  const auto b = rho_t_star_B(1.0, 1.0, 1.0, 6.0);
  CHECK(b.rho_star == doctest::Approx(4.0));
  CHECK(b.t_star == doctest::Approx(0.5));
  CHECK(rho_t_star_B(1.0, 0.0, 1.0, 6.0).t_star == 0.0);
  CHECK(rho_t_star_A(1.0, 0.0, 1.0, 6.0).t_star == 0.0);
  CHECK(std::isinf(rho_t_star_B(1.0, 1.0, 1.0, 2.0).t_star));

  // T* increases to T as rho decreases to rho*.
  const double rs = rho_t_star_B(1.0, 1.0, 1.0, 0.0).rho_star;
  double prev = 0;
  for (double d : {1.0, 0.1, 1e-3, 1e-6}) {
    const double t = rho_t_star_B(1.0, 1.0, 1.0, rs + d).t_star;
    CHECK(t > prev);
    CHECK(t < 1.0);
    prev = t;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("thresholds agree with the lemma") {
  for (double c : {0.0, 0.3, 2.0}) {
    for (double mult : {1.5, 4.0}) {
      const double norm0 = 0.7, T = 2.0;
      const auto ga = rho_t_star_A(c, norm0, T, 0.0);
      const double rho_a = mult * std::max(ga.rho_star, 1e-3);
      const auto la = lemma_bound(c, c, norm0, rho_a, T);
      CHECK(rho_t_star_A(c, norm0, T, rho_a).t_star == doctest::Approx(la.t_star_bound));

      const auto gb = rho_t_star_B(c, norm0, T, 0.0);
      const double rho_b = mult * std::max(gb.rho_star, 1e-3);
      const auto lb = lemma_bound(0.0, c, norm0, rho_b, T);
      CHECK(rho_t_star_B(c, norm0, T, rho_b).t_star == doctest::Approx(lb.t_star_bound));
    }
  }
}

TEST_CASE("T* is decreasing in rho for all variants") {
  LocalInputs in;
  in.gamma = 0.1;
  in.c7 = 1.0;
  in.m0 = 1.0;
  in.c_str = 1.0;
  in.c_omega = 0.5;
  in.omega_measure = 1.0;
  in.rho = 0.0;
  const double rs_c = rho_t_star_C(in).rho_star;
  double pa = INFINITY, pb = INFINITY, pc = INFINITY;
  for (double f : {1.1, 2.0, 8.0, 64.0, 1e6}) {
    const double ta = rho_t_star_A(0.5, 1.0, 1.0, f * rho_t_star_A(0.5, 1.0, 1.0, 0).rho_star).t_star;
    const double tb = rho_t_star_B(0.5, 1.0, 1.0, f * rho_t_star_B(0.5, 1.0, 1.0, 0).rho_star).t_star;
    in.rho = f * rs_c;
    const double tc = rho_t_star_C(in).t_star;
    CHECK(ta < pa);
    CHECK(tb < pb);
    CHECK(tc < pc);
    CHECK(tc < in.T);
    pa = ta;
    pb = tb;
    pc = tc;
  }
  CHECK(pa < 1e-5);
  CHECK(pb < 1e-5);
  CHECK(pc < 1e-5);
}

TEST_CASE("threshold for the local feedback") {
  LocalInputs in;
  in.gamma = 0.1;
  in.c7 = 1.0;
  in.lipschitz = 1.0;
  in.m0 = 1.0;
  in.phistar_inf = 0.0;
  in.pi0_abs = 0.0;
  in.T = 1.0;
  in.c_str = 1.0;
  in.c_omega = 1.0;
  in.omega_measure = 1.0;
  in.rho = 5.0;
  const auto lt = rho_t_star_C(in);
  CHECK(lt.m_pi_star == doctest::Approx(1.0));
  CHECK(lt.rho_star == doctest::Approx(2.1 / 0.9));
  CHECK(lt.a_rho == doctest::Approx(0.1 * (5.0 + 1.0) + 1.0));
  CHECK(lt.t_star == doctest::Approx(1.0 / (5.0 - lt.a_rho)));

  in.m0 = 0.0;
  CHECK(rho_t_star_C(in).t_star == 0.0);

  // At rho = A(rho) + M0/T the predicted time is T.
  in.m0 = 1.0;
  in.rho = lt.rho_star;
  CHECK(rho_t_star_C(in).t_star == doctest::Approx(1.0));

  in.gamma = 1.0;  // margin 0
  CHECK_THROWS_AS(rho_t_star_C(in), BoundInapplicable);
}

TEST_CASE("estimated constants") {
  ProblemSpec z = desk('B', 33);
  z.theta0 = Field(z.mesh());
  z.phi0 = Field(z.mesh());
  CHECK(estimate_constant(pilot(z, 0.1), z, ConstantKind::CB, 1.0) == 0.0);

  SimulateOptions no_snap;
  no_snap.T = 0.01;
  CHECK_THROWS_AS(estimate_constant(simulate(z, no_snap), z, ConstantKind::CB, 1.0), std::invalid_argument);

  const ProblemSpec a = desk('A', 33);
  const Trajectory tr = pilot(a, 0.2);
  CHECK(estimate_constant(tr, a, ConstantKind::CA, 1.0) == estimate_constant(tr, a, ConstantKind::CA, 1.0));

  // Desk problem: theta decays, so the sup is ||theta0|| = 1/sqrt(2).
  const ProblemSpec b = desk('B');
  const double cb = estimate_constant(pilot(b), b, ConstantKind::CB, 1.0);
  CHECK(cb == doctest::Approx(std::sqrt(0.5)).epsilon(0.05));
}

TEST_CASE("bounds report JSON") {
  const ProblemSpec b = desk('B', 33);
  BoundsReport r = assemble_bounds(b, pilot(b, 0.3), 1.0, 1.0, 0.3, 1.2);
  set_gain(r, 3.0 * r.rho_star);
  const auto j = to_json(r);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("c_str").at("value").get<double>() == doctest::Approx(10.0));
  CHECK(j.at("constants").at("C_B").at("provenance") == "empirical");
  CHECK_FALSE(j.contains("local_inputs"));
  const BoundsReport back = bounds_from_json(j);
  CHECK(back.rho_star == r.rho_star);
  CHECK(back.t_star_pred == r.t_star_pred);
  CHECK(back.applicable);

  const ProblemSpec a = desk('A', 33);
  const auto ja = to_json(assemble_bounds(a, pilot(a, 0.3), 1.0, 50.0, 0.3, 1.2));
  CHECK_FALSE(ja.contains("local_inputs"));
  CHECK_FALSE(ja.contains("aux"));
  CHECK(ja.at("constants").contains("C_A"));
}

TEST_CASE("local report on a tiny domain") {
  const double L = 0.01;
  const Mesh m = Mesh::interval(L, 33);
  ProblemSpec s;
  s.theta0 = Field(m, 0.5);
  s.phi0 = Field::from_function(m, [L](double x, double, double) { return 0.5 + 0.3 * std::cos(kPi * x / L); });
  s.variant = VariantC{Field(m)};
  const double c_omega = estimate_embedding_constant(m, 32, 1);
  BoundsReport r = assemble_bounds(s, pilot(s, 0.3), 1.0, 1.0, 0.3, c_omega);
  CHECK(r.smallness_margin > 0.0);
  CHECK(r.heuristic);
  set_gain(r, 2 * r.rho_star);
  REQUIRE(r.local);
  CHECK(r.applicable);
  CHECK(r.local->m0 == doctest::Approx(0.8));
  const auto j = to_json(r);
  CHECK(j.contains("aux"));
  const BoundsReport back = bounds_from_json(j);
  CHECK(back.t_star_pred == doctest::Approx(r.t_star_pred).epsilon(1e-14));

  // The same data on the unit interval violates smallness.
  const Mesh big = Mesh::interval(1.0, 33);
  ProblemSpec u = s;
  u.theta0 = Field(big, 0.5);
  u.phi0 = Field(big, 0.5);
  u.variant = VariantC{Field(big)};
  BoundsReport ru = assemble_bounds(u, pilot(u, 0.3), 1.0, 100.0, 0.3, estimate_embedding_constant(big, 16, 1));
  CHECK(ru.smallness_margin < 0.0);
  CHECK_FALSE(ru.applicable);
  CHECK(std::isinf(ru.rho_star));
}
