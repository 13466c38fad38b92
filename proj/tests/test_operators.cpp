#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "pfsmc/errors.hpp"
#include "pfsmc/operators.hpp"

using namespace pfsmc;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Brute-force oracle for x + eps * beta0(x) = r, independent of the library.
double bisect_resolvent(PotentialKind kind, double eps, double r) {
  if (kind == PotentialKind::Obstacle) return std::clamp(r, -1.0, 1.0);
  auto g = [&](double x) {
    const double b = kind == PotentialKind::Regular ? x * x * x : std::log((1 + x) / (1 - x));
    return x + eps * b - r;
  };
  double lo, hi;
  if (kind == PotentialKind::Regular) {
    lo = -std::abs(r) - 1;
    hi = std::abs(r) + 1;
  } else {
    lo = -1 + 1e-16;
    hi = 1 - 1e-16;
  }
  for (int i = 0; i < 300; ++i) {
    const double m = 0.5 * (lo + hi);
    (g(m) > 0 ? hi : lo) = m;
  }
  return 0.5 * (lo + hi);
}

Potential pot_of(int k) {
  if (k == 0) return Potential::regular();
  if (k == 1) return Potential::logarithmic();
  return Potential::obstacle();
}

}  // namespace

TEST_CASE("potential kinds parse and list alternatives") {
  CHECK(parse_potential_kind("Regular") == PotentialKind::Regular);
  CHECK(parse_potential_kind("logarithmic") == PotentialKind::Logarithmic);
  CHECK(parse_potential_kind("OBSTACLE") == PotentialKind::Obstacle);
  try {
    parse_potential_kind("quartic");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("regular") != std::string::npos);
    CHECK(msg.find("logarithmic") != std::string::npos);
    CHECK(msg.find("obstacle") != std::string::npos);
  }
  CHECK_THROWS(Potential::logarithmic(1.0));
  CHECK_THROWS(Potential::obstacle(0.0));
}

TEST_CASE("beta_hat values") {
  CHECK(beta_hat(Potential::regular(), 0.0) == 0.0);
  CHECK(beta_hat(Potential::logarithmic(), 0.0) == 0.0);
  CHECK(beta_hat(Potential::obstacle(), 0.0) == 0.0);
  CHECK(beta_hat(Potential::obstacle(), 1.5) == kInf);
  CHECK(beta_hat(Potential::logarithmic(), 1.5) == kInf);
  CHECK(beta_hat(Potential::logarithmic(), 1.0) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-14));
  CHECK(beta_hat(Potential::logarithmic(), 0.5) == doctest::Approx(0.26162407188227393).epsilon(1e-13));
  CHECK(beta_hat(Potential::regular(), 2.0) == doctest::Approx(4.0));
}

TEST_CASE("beta_hat log matches quadrature of its minimal section") {
  // Simpson on [0, 0.5] of ln((1+s)/(1-s)).
  const int n = 2000;
  const double h = 0.5 / n;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    s += w * std::log((1 + x) / (1 - x));
  }
  s *= h / 3;
  CHECK(beta_hat(Potential::logarithmic(), 0.5) == doctest::Approx(s).epsilon(1e-10));
}

TEST_CASE("splitting consistency F = beta_hat + pi_hat") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.999, 0.999);
  for (int i = 0; i < 200; ++i) {
    const double r = u(rng);
    CHECK(double_well(Potential::regular(), r) == doctest::Approx(0.25 * (r * r - 1) * (r * r - 1)).epsilon(1e-13));
    const double log_f = (1 + r) * std::log(1 + r) + (1 - r) * std::log(1 - r) - 2.0 * r * r;
    CHECK(double_well(Potential::logarithmic(2.0), r) == doctest::Approx(log_f).epsilon(1e-12));
    CHECK(double_well(Potential::obstacle(1.0), r) == doctest::Approx(-r * r).epsilon(1e-13));
  }
  CHECK(double_well(Potential::regular(), 1.0) == 0.0);
  CHECK(double_well(Potential::regular(), 0.0) == 0.25);
}

TEST_CASE("beta_minimal") {
  CHECK(beta_minimal(Potential::regular(), 2.0) == 8.0);
  CHECK(beta_minimal(Potential::obstacle(), 1.0) == 0.0);
  CHECK(beta_minimal(Potential::obstacle(), -1.0) == 0.0);
  CHECK(beta_minimal(Potential::logarithmic(), 0.5) == doctest::Approx(1.0986122886681098).epsilon(1e-14));
  // Finite-difference derivative of beta_hat at 0.5.
  const double h = 1e-6;
  const auto log = Potential::logarithmic();
  const double fd = (beta_hat(log, 0.5 + h) - beta_hat(log, 0.5 - h)) / (2 * h);
  CHECK(beta_minimal(log, 0.5) == doctest::Approx(fd).epsilon(1e-8));
  CHECK_THROWS_AS(beta_minimal(Potential::obstacle(), 1.2), DomainError);
  CHECK_THROWS_AS(beta_minimal(Potential::logarithmic(), 1.0), DomainError);
}

TEST_CASE("resolvent examples") {
  CHECK(resolvent(Potential::regular(), 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(resolvent(Potential::obstacle(), 0.5, 2.0) == 1.0);
  const double golden = 0.8004230320591057;
  CHECK(resolvent(Potential::logarithmic(), 1.0, 3.0) == doctest::Approx(golden).epsilon(1e-12));
  CHECK(bisect_resolvent(PotentialKind::Logarithmic, 1.0, 3.0) == doctest::Approx(golden).epsilon(1e-12));
}

TEST_CASE("resolvent agrees with a bisection oracle and is nonexpansive") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(-5.0, 5.0);
  std::uniform_real_distribution<double> le(-5.0, 1.0);
  std::uniform_int_distribution<int> pk(0, 2);
  for (int i = 0; i < 1000; ++i) {
    const Potential p = pot_of(pk(rng));
    const double eps = std::pow(10.0, le(rng));
    const double r1 = ur(rng), r2 = ur(rng);
    const double j1 = resolvent(p, eps, r1), j2 = resolvent(p, eps, r2);
    CHECK(std::abs(j1 - bisect_resolvent(p.kind(), eps, r1)) <= 1e-10);
    CHECK(std::abs(j1 - j2) <= std::abs(r1 - r2) + 1e-14);
  }
}

TEST_CASE("beta_yosida examples and invariants") {
  CHECK(beta_yosida(Potential::regular(), 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(beta_yosida(Potential::obstacle(), 0.5, 2.0) == doctest::Approx(2.0));
  for (int k = 0; k < 3; ++k)
    for (double eps : {1e-3, 0.1, 1.0}) CHECK(beta_yosida(pot_of(k), eps, 0.0) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ur(-3.0, 3.0);
  for (int k = 0; k < 3; ++k) {
    const Potential p = pot_of(k);
    for (int i = 0; i < 300; ++i) {
      double a = ur(rng), b = ur(rng);
      if (a > b) std::swap(a, b);
      const double eps = 0.05;
      CHECK(beta_yosida(p, eps, a) <= beta_yosida(p, eps, b) + 1e-12);
      CHECK(sign_eps_scalar(eps, a) <= sign_eps_scalar(eps, b));
    }
  }
}

TEST_CASE("pi_eval") {
  const auto reg = pi_eval(Potential::regular(), 3.0);
  CHECK(reg.value == -3.0);
  CHECK(reg.derivative == -1.0);
  const auto lg = pi_eval(Potential::logarithmic(2.0), 1.0);
  CHECK(lg.value == -4.0);
  CHECK(lg.derivative == -4.0);
  const auto ob = pi_eval(Potential::obstacle(1.0), -0.5);
  CHECK(ob.value == 1.0);
  CHECK(ob.derivative == -2.0);
  CHECK(Potential::regular().lipschitz() == 1.0);
  CHECK(Potential::logarithmic(3.0).lipschitz() == 6.0);
  for (int k = 0; k < 3; ++k) CHECK(pi_eval(pot_of(k), 0.0).value == 0.0);
}

TEST_CASE("sign_eps_scalar") {
  CHECK(sign_eps_scalar(0.1, 5.0) == 1.0);
  CHECK(sign_eps_scalar(0.5, 0.25) == 0.5);
  CHECK(sign_eps_scalar(0.5, 0.0) == 0.0);
  CHECK(sign_eps_scalar(0.5, -0.7) == -1.0);
}

TEST_CASE("sign_eps_field") {
  const Mesh m = Mesh::interval(1.0, 33);
  const Field zero(m);
  CHECK(l2_norm(sign_eps_field(zero, 0.3)) == 0.0);

  const Field v = Field::from_function(m, [](double x, double, double) { return 1.0 + x; });
  const double n = l2_norm(v);
  Field v2 = v;
  v2 *= 2.0 / n;  // ||v2|| = 2
  const Field s2 = sign_eps_field(v2, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(s2[i] == doctest::Approx(v2[i] / 2));
  Field vh = v;
  vh *= 0.5 / n;  // ||vh|| = 0.5
  const Field sh = sign_eps_field(vh, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(sh[i] == vh[i]);
  CHECK(l2_norm(s2) <= 1.0 + 1e-15);
}

TEST_CASE("moreau_norm") {
  CHECK(moreau_norm(2.0, 1.0) == 1.5);
  CHECK(moreau_norm(0.0, 0.3) == 0.0);
  CHECK(moreau_norm(0.3, 0.3) == doctest::Approx(0.15));
  CHECK(moreau_norm(0.3 + 1e-12, 0.3) == doctest::Approx(0.15));
  for (double v : {0.0, 0.1, 0.5, 2.0, 10.0}) CHECK(moreau_norm(v, 0.4) <= v);
}

TEST_CASE("Sign_eps is the gradient of the Moreau envelope") {
  const Mesh m = Mesh::interval(1.0, 33);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto randf = [&] {
    std::vector<double> v(m.size());
    for (auto& x : v) x = nd(rng);
    return Field(m, std::move(v));
  };
  for (double eps : {0.05, 0.5, 5.0}) {
    const Field v = randf();
    const Field g = sign_eps_field(v, eps);
    for (int k = 0; k < 5; ++k) {
      const Field d = randf();
      const double h = 1e-6;
      const double fd = (moreau_norm(l2_norm(v + h * d), eps) - moreau_norm(l2_norm(v - h * d), eps)) / (2 * h);
      const double an = inner(g, d);
      CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, l2_norm(g) * l2_norm(d)));
    }
  }
}

TEST_CASE("ball_shrink and soft_threshold") {
  CHECK(soft_threshold(0.3, 0.5) == 0.0);
  CHECK(soft_threshold(2.0, 0.5) == 1.5);
  CHECK(soft_threshold(-2.0, 0.5) == -1.5);
  const Mesh m = Mesh::interval(1.0, 9);
  const Field v(m, 2.0);  // ||v|| = 2
  const Field w = ball_shrink(v, 0.5);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(w[i] == doctest::Approx(1.5));
  CHECK(l2_norm(ball_shrink(v, 3.0)) == 0.0);
}
