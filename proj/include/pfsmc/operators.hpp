#pragma once

// Double-well potentials split as F = beta_hat + pi_hat, the monotone graph
// beta = d(beta_hat), its resolvent and Yosida approximation, and the
// regularized sign operators used by the feedback laws.

#include <string_view>
#include <utility>

#include "pfsmc/grid.hpp"

namespace pfsmc {

enum class PotentialKind { Regular, Logarithmic, Obstacle };

std::string_view to_string(PotentialKind kind);
/// Accepts "regular", "logarithmic", "obstacle" (case-insensitive).
PotentialKind parse_potential_kind(std::string_view name);

/// Regular:     F(r) = (r^2-1)^2/4,          beta_hat = r^4/4,             pi = -r
/// Logarithmic: F(r) = (1+r)ln(1+r)+(1-r)ln(1-r) - c0 r^2,   pi = -2 c0 r, c0 > 1
/// Obstacle:    F(r) = I_[-1,1](r) - c0 r^2,                 pi = -2 c0 r, c0 > 0
class Potential {
 public:
  static Potential regular() { return Potential(PotentialKind::Regular, 0.0); }
  static Potential logarithmic(double c0 = 2.0);
  static Potential obstacle(double c0 = 1.0);
  static Potential make(PotentialKind kind, double c0);

  PotentialKind kind() const noexcept { return kind_; }
  double c0() const noexcept { return c0_; }
  /// Lipschitz constant of pi.
  double lipschitz() const noexcept;

  /// True when r lies in D(beta).
  bool in_graph_domain(double r) const noexcept;
  /// True when beta_hat(r) is finite.
  bool in_energy_domain(double r) const noexcept;

 private:
  Potential(PotentialKind kind, double c0) : kind_(kind), c0_(c0) {}
  PotentialKind kind_;
  double c0_;
};

/// Convex part; +infinity outside the effective domain.
double beta_hat(const Potential& pot, double r);
/// Full double well F = beta_hat + pi_hat, including the constant 1/4 of the
/// regular potential.
double double_well(const Potential& pot, double r);
/// Element of beta(r) with least modulus. Throws DomainError off D(beta).
double beta_minimal(const Potential& pot, double r);

/// Unique x with x + eps * beta(x) containing r, i.e. the proximal map of
/// eps * beta_hat.
double resolvent(const Potential& pot, double eps, double r);
/// (r - resolvent(r)) / eps
double beta_yosida(const Potential& pot, double eps, double r);

struct PiValue {
  double value;
  double derivative;
};
PiValue pi_eval(const Potential& pot, double r);

/// r / max(eps, |r|)
double sign_eps_scalar(double eps, double r);
/// v / max(eps, ||v||_H)
Field sign_eps_field(const Field& v, double eps);
/// Moreau envelope of the H-norm written in terms of ||v||.
double moreau_norm(double v_norm, double eps);

// Exact proximal maps of the (non-regularized) feedback terms, used by the
// prox integrator.

/// argmin_w 1/2 ||w - v||^2 + tau ||w||: shrink the whole field toward zero.
Field ball_shrink(const Field& v, double tau);
/// argmin_w 1/2 (w - r)^2 + tau |w|
double soft_threshold(double r, double tau);

}  // namespace pfsmc
