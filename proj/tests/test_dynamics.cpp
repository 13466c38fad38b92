#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "pfsmc/dynamics.hpp"
#include "pfsmc/errors.hpp"

using namespace pfsmc;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec desk(char variant, std::size_t nodes = 65) {
  const Mesh m = Mesh::interval(1.0, nodes);
  ProblemSpec s;
  s.theta0 = Field::from_function(m, [](double x, double, double) { return std::cos(kPi * x); });
  s.phi0 = Field::from_function(m, [](double x, double, double) { return 0.5 * std::cos(kPi * x); });
  if (variant == 'A')
    s.variant = VariantA{1.0, Field(m, 0.2)};
  else if (variant == 'B')
    s.variant = VariantB{Field(m)};
  else
    s.variant = VariantC{Field(m)};
  return s;
}

ProblemSpec zero_spec(char variant) {
  ProblemSpec s = desk(variant, 17);
  s.theta0 = Field(s.mesh());
  s.phi0 = Field(s.mesh());
  if (variant == 'A') std::get<VariantA>(s.variant).eta_star = Field(s.mesh());
  return s;
}

}  // namespace

TEST_CASE("parameters must be positive") {
  PhysParams p;
  p.kappa = 0.0;
  CHECK_THROWS(p.validate());
  ProblemSpec s = desk('B');
  s.eps = 0.0;
  CHECK_THROWS(s.validate());
}

TEST_CASE("init_state") {
  const ProblemSpec z = zero_spec('B');
  const State st = init_state(z);
  CHECK(st.t == 0.0);
  CHECK(linf_norm(st.theta) == 0.0);
  CHECK(linf_norm(st.phi) == 0.0);

  ProblemSpec ob = desk('B');
  ob.potential = Potential::obstacle();
  ob.phi0[3] = 1.5;
  CHECK_THROWS(ob.validate());
  CHECK_THROWS(init_state(ob));

  const ProblemSpec s = desk('B');
  CHECK(enthalpy_mass(init_state(s), s) == doctest::Approx(integral(s.theta0 + s.params.ell * s.phi0)));

  ProblemSpec bad = desk('B');
  bad.theta0 = Field(Mesh::interval(1.0, 9));
  CHECK_THROWS(init_state(bad));
}

TEST_CASE("control_term") {
  ProblemSpec s = zero_spec('B');
  CHECK(linf_norm(control_term(init_state(s), s)) == 0.0);

  ProblemSpec a = desk('A');
  a.eps = 0.01;
  State st = init_state(a);
  // Rescale the residual to norm 2 eps.
  const Field res = manifold_residual(st, a);
  st.theta = st.theta + ((2 * a.eps / l2_norm(res)) - 1.0) * res;
  CHECK(manifold_distance(st, a) == doctest::Approx(2 * a.eps));
  CHECK(l2_norm(control_term(st, a)) == doctest::Approx(1.0));

  ProblemSpec c = zero_spec('C');
  c.eps = 0.01;
  State sc = init_state(c);
  sc.phi = Field(c.mesh(), -3 * c.eps);
  const Field sig = control_term(sc, c);
  for (std::size_t i = 0; i < sig.size(); ++i) CHECK(sig[i] == -1.0);
}

TEST_CASE("equilibrium stays at rest") {
  const ProblemSpec s = zero_spec('B');
  State st = init_state(s);
  for (int n = 0; n < 5; ++n) st = step(st, s, 0.01, StepMode::Prox);
  CHECK(linf_norm(st.theta) <= 1e-12);
  CHECK(linf_norm(st.phi) <= 1e-12);

  SimulateOptions o;
  o.T = 0.1;
  o.dt = 0.01;
  const Trajectory tr = simulate(s, o);
  for (const auto& smp : tr.samples) {
    CHECK(smp.psi == 0.0);
    CHECK(smp.theta_linf == 0.0);
    CHECK(smp.phi_linf == 0.0);
  }
  CHECK(balance_residual(tr, s) <= 1e-12);
}

TEST_CASE("local prox step annihilates a small residual") {
  const Mesh m = Mesh::interval(1.0, 3);
  ProblemSpec s;
  const double r = 0.3;
  s.phi0 = Field(m, r);
  // theta chosen so that gamma theta balances beta + pi at phi0.
  s.theta0 = Field(m, r * r * r - r);
  s.variant = VariantC{Field(m)};
  const double dt = 1e-3;
  s.rho = 0.5 / dt;
  const State next = step(init_state(s), s, dt, StepMode::Prox);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(next.phi[i] == 0.0);
}

TEST_CASE("one step of B conserves enthalpy") {
  for (StepMode mode : {StepMode::Prox, StepMode::Regularized}) {
    const ProblemSpec s = desk('B');
    const State st = init_state(s);
    const State next = step(st, s, 1e-3, mode);
    const double m0 = enthalpy_mass(st, s), m1 = enthalpy_mass(next, s);
    CHECK(std::abs(m1 - m0) <= 1e-10 * std::max(1.0, std::abs(m0)));
  }
}

TEST_CASE("regularized step uses control_term of the current state") {
  for (char v : {'A', 'B', 'C'}) {
    ProblemSpec s = desk(v);
    s.eps = 0.05;
    const State st = init_state(s);
    const State next = step(st, s, 1e-3, StepMode::Regularized);
    const Field expect = control_term(st, s);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(next.sigma[i] == expect[i]);
  }
}

TEST_CASE("obstacle prox keeps phi in [-1, 1]") {
  ProblemSpec s = desk('B');
  s.potential = Potential::obstacle(1.0);
  s.theta0 = Field(s.mesh(), 20.0);
  s.phi0 = Field::from_function(s.mesh(), [](double x, double, double) { return 0.9 * std::cos(kPi * x); });
  s.variant = VariantB{Field(s.mesh(), 0.5)};
  s.rho = 0.0;
  State st = init_state(s);
  bool touched = false;
  for (int n = 0; n < 200; ++n) {
    st = step(st, s, 5e-3, StepMode::Prox);
    for (double v : st.phi.values()) {
      REQUIRE(std::abs(v) <= 1.0);
      touched = touched || v == 1.0;
    }
  }
  CHECK(touched);
}

TEST_CASE("simulate sampling") {
  const ProblemSpec s = desk('B');
  SimulateOptions o;
  o.T = 0.01;
  o.dt = 0.01;
  CHECK(simulate(s, o).samples.size() == 2);
  o.T = 0.105;
  o.dt = 0.01;
  o.sample_every = 5;
  const Trajectory tr = simulate(s, o);
  REQUIRE(tr.samples.size() == 4);  // 0, 0.05, 0.10, 0.105
  CHECK(tr.samples.back().t == 0.105);
  for (std::size_t k = 1; k < tr.samples.size(); ++k) CHECK(tr.samples[k].t > tr.samples[k - 1].t);
}

TEST_CASE("free_energy") {
  const Mesh m = Mesh::interval(1.0, 17);
  ProblemSpec s;
  s.theta0 = Field(m);
  s.variant = VariantB{Field(m)};
  s.phi0 = Field(m, 1.0);
  CHECK(free_energy(init_state(s), s) == doctest::Approx(0.0).epsilon(1e-14));
  s.phi0 = Field(m, 0.0);
  CHECK(free_energy(init_state(s), s) == doctest::Approx(0.25));
  s.potential = Potential::obstacle();
  State st = init_state(s);
  st.phi = Field(m, 1.5);
  CHECK(free_energy(st, s) == std::numeric_limits<double>::infinity());
}

TEST_CASE("balance with a constant source") {
  ProblemSpec s = desk('B');
  const Field one(s.mesh(), 1.0);
  s.source = [one](double) { return one; };
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 1e-3;
  const Trajectory tr = simulate(s, o);
  const auto& a = tr.samples.front();
  const auto& b = tr.samples.back();
  CHECK((b.mass - a.mass) / (b.t - a.t) == doctest::Approx(s.mesh().measure()).epsilon(1e-8));
  CHECK(balance_residual(tr, s) <= 1e-8);
}

TEST_CASE("balance residual of variant A accounts for the control") {
  ProblemSpec s = desk('A');
  s.rho = 5.0;
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 1e-3;
  CHECK(balance_residual(simulate(s, o), s) <= 1e-8);
  o.mode = StepMode::Regularized;
  CHECK(balance_residual(simulate(s, o), s) <= 1e-8);
}

TEST_CASE("temperature growth is at most affine in sqrt(rho)") {
  double first = 0;
  for (double rho : {1.0, 4.0, 16.0, 64.0}) {
    ProblemSpec s = desk('A');
    s.rho = rho;
    SimulateOptions o;
    o.T = 0.5;
    o.dt = 1e-3;
    double sup = 0;
    for (const auto& smp : simulate(s, o).samples) sup = std::max(sup, smp.theta_l2);
    const double q = sup / (std::sqrt(rho) + 1);
    if (first == 0) first = q;
    CHECK(q <= 1.1 * first);
  }
}

TEST_CASE("trajectory CSV round trip") {
  const ProblemSpec s = desk('B');
  SimulateOptions o;
  o.T = 0.05;
  o.dt = 1e-3;
  const Trajectory tr = simulate(s, o);
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  CHECK(header == "t,psi,mass,energy,balance_residual,theta_linf,phi_linf");
  const auto back = read_trajectory_csv(ss);
  REQUIRE(back.size() == tr.samples.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].t == tr.samples[k].t);
    CHECK(back[k].psi == tr.samples[k].psi);
    CHECK(back[k].mass == tr.samples[k].mass);
  }
}

TEST_CASE("blow-up carries the failing time") {
  ProblemSpec s = desk('B');
  s.phi0 = 100.0 * s.phi0;
  s.eps = 1e-4;
  SimulateOptions o;
  o.T = 100.0;
  o.dt = 0.2;
  o.mode = StepMode::Regularized;
  try {
    simulate(s, o);
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 100.0);
  }
}
