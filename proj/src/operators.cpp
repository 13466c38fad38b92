#include "pfsmc/operators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "pfsmc/errors.hpp"

namespace pfsmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Logarithmic resolvent iterates stay in [-1 + kLogGuard, 1 - kLogGuard].
constexpr double kLogGuard = 1e-14;
constexpr double kResidualTol = 1e-12;
constexpr int kMaxIterations = 200;

// Safeguarded Newton for an increasing function g on [lo, hi] with
// g(lo) <= 0 <= g(hi). Falls back to bisection whenever the Newton step
// leaves the bracket.
template <class G, class DG>
double monotone_root(G&& g, DG&& dg, double lo, double hi, double scale) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxIterations; ++it) {
    const double gx = g(x);
    if (std::abs(gx) <= kResidualTol * scale) {
      // Two more Newton steps reach round-off; the Yosida quotient divides this error by eps.
      for (int k = 0; k < 2; ++k) {
        const double d = dg(x), gk = g(x);
        if (!(d > 0.0) || gk == 0.0) break;
        const double next = x - gk / d;
        if (!(next >= lo && next <= hi)) break;
        x = next;
      }
      return x;
    }
    if (gx > 0.0)
      hi = x;
    else
      lo = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) return x;
    const double d = dg(x);
    double next = d > 0.0 ? x - gx / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  throw ConvergenceError("resolvent: iteration budget exhausted");
}

}  // namespace

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Regular:
      return "regular";
    case PotentialKind::Logarithmic:
      return "logarithmic";
    case PotentialKind::Obstacle:
      return "obstacle";
  }
  return "unknown";
}

PotentialKind parse_potential_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "regular") return PotentialKind::Regular;
  if (lower == "logarithmic" || lower == "log") return PotentialKind::Logarithmic;
  if (lower == "obstacle") return PotentialKind::Obstacle;
  throw std::invalid_argument("unknown potential kind '" + std::string(name) +
                              "' (allowed: regular, logarithmic, obstacle)");
}

Potential Potential::logarithmic(double c0) {
  if (!(c0 > 1.0)) throw std::invalid_argument("logarithmic potential needs c0 > 1 for a double well");
  return Potential(PotentialKind::Logarithmic, c0);
}

Potential Potential::obstacle(double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("obstacle potential needs c0 > 0");
  return Potential(PotentialKind::Obstacle, c0);
}

Potential Potential::make(PotentialKind kind, double c0) {
  switch (kind) {
    case PotentialKind::Regular:
      return regular();
    case PotentialKind::Logarithmic:
      return logarithmic(c0);
    case PotentialKind::Obstacle:
      return obstacle(c0);
  }
  return regular();
}

double Potential::lipschitz() const noexcept {
  return kind_ == PotentialKind::Regular ? 1.0 : 2.0 * c0_;
}

bool Potential::in_graph_domain(double r) const noexcept {
  switch (kind_) {
    case PotentialKind::Regular:
      return std::isfinite(r);
    case PotentialKind::Logarithmic:
      return r > -1.0 && r < 1.0;
    case PotentialKind::Obstacle:
      return r >= -1.0 && r <= 1.0;
  }
  return false;
}

bool Potential::in_energy_domain(double r) const noexcept {
  if (kind_ == PotentialKind::Regular) return std::isfinite(r);
  return r >= -1.0 && r <= 1.0;
}

double beta_hat(const Potential& pot, double r) {
  switch (pot.kind()) {
    case PotentialKind::Regular:
      return 0.25 * r * r * r * r;
    case PotentialKind::Logarithmic: {
      if (!(r >= -1.0 && r <= 1.0)) return kInf;
      const auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
      return xlogx(1.0 + r) + xlogx(1.0 - r);
    }
    case PotentialKind::Obstacle:
      return (r >= -1.0 && r <= 1.0) ? 0.0 : kInf;
  }
  return kInf;
}

double double_well(const Potential& pot, double r) {
  if (pot.kind() == PotentialKind::Regular) {
    const double q = r * r - 1.0;
    return 0.25 * q * q;
  }
  return beta_hat(pot, r) - pot.c0() * r * r;
}

double beta_minimal(const Potential& pot, double r) {
  if (!pot.in_graph_domain(r))
    throw DomainError("beta_minimal: r = " + std::to_string(r) + " is outside D(beta) for the " +
                      std::string(to_string(pot.kind())) + " potential");
  switch (pot.kind()) {
    case PotentialKind::Regular:
      return r * r * r;
    case PotentialKind::Logarithmic:
      return 2.0 * std::atanh(r);
    case PotentialKind::Obstacle:
      return 0.0;
  }
  return 0.0;
}

double resolvent(const Potential& pot, double eps, double r) {
  if (!(eps > 0.0)) throw std::invalid_argument("resolvent: eps must be positive");
  const double scale = std::max(1.0, std::abs(r));
  switch (pot.kind()) {
    case PotentialKind::Regular: {
      if (r == 0.0) return 0.0;
      // |x| <= |r| since x and beta(x) share the sign of r.
      return monotone_root([&](double x) { return x + eps * x * x * x - r; },
                           [&](double x) { return 1.0 + 3.0 * eps * x * x; }, std::min(0.0, r),
                           std::max(0.0, r), scale);
    }
    case PotentialKind::Logarithmic: {
      if (r == 0.0) return 0.0;
      const auto g = [&](double x) { return x + 2.0 * eps * std::atanh(x) - r; };
      const double lo = std::max(-1.0 + kLogGuard, std::min(0.0, r));
      const double hi = std::min(1.0 - kLogGuard, std::max(0.0, r));
      if (g(hi) <= 0.0) return hi;
      if (g(lo) >= 0.0) return lo;
      return monotone_root(g, [&](double x) { return 1.0 + 2.0 * eps / (1.0 - x * x); }, lo, hi, scale);
    }
    case PotentialKind::Obstacle:
      return std::clamp(r, -1.0, 1.0);
  }
  return r;
}

double beta_yosida(const Potential& pot, double eps, double r) {
  if (pot.kind() == PotentialKind::Obstacle) {
    if (!(eps > 0.0)) throw std::invalid_argument("beta_yosida: eps must be positive");
    return (r - std::clamp(r, -1.0, 1.0)) / eps;
  }
  return (r - resolvent(pot, eps, r)) / eps;
}

PiValue pi_eval(const Potential& pot, double r) {
  if (pot.kind() == PotentialKind::Regular) return {-r, -1.0};
  return {-2.0 * pot.c0() * r, -2.0 * pot.c0()};
}

double sign_eps_scalar(double eps, double r) { return r / std::max(eps, std::abs(r)); }

Field sign_eps_field(const Field& v, double eps) {
  Field out = v;
  out *= 1.0 / std::max(eps, l2_norm(v));
  return out;
}

double moreau_norm(double v_norm, double eps) {
  return v_norm <= eps ? v_norm * v_norm / (2.0 * eps) : v_norm - 0.5 * eps;
}

Field ball_shrink(const Field& v, double tau) {
  const double n = l2_norm(v);
  if (n <= tau) return Field(v.mesh());
  Field out = v;
  out *= 1.0 - tau / n;
  return out;
}

double soft_threshold(double r, double tau) {
  if (r > tau) return r - tau;
  if (r < -tau) return r + tau;
  return 0.0;
}

}  // namespace pfsmc
