#pragma once

// Constants and thresholds of the sliding-mode results: the structural
// constant, the smallness margin for the local feedback, data-dependent
// constants measured on pilot runs, and the gain threshold rho* together with
// the predicted reaching time T*.

#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "pfsmc/dynamics.hpp"

namespace pfsmc {

inline constexpr int kBoundsSchemaVersion = 1;

/// 2 max{ sqrt(6)/nu, ell/(sqrt(kappa) sqrt(nu)) + 4 ell/kappa }
double c_str(const PhysParams& params);

/// gamma * C_str * C_Omega * |Omega|^{7/6}
double smallness_product(const PhysParams& params, double c_omega, double omega_measure);
/// 1 - smallness_product; the local-feedback result needs it positive.
double smallness_margin(const PhysParams& params, double c_omega, double omega_measure);

enum class ConstantKind { CA, CB, C6, C7 };
std::string to_string(ConstantKind kind);

/// Measures a data constant on a pilot run with snapshots:
///   C_A = sup_t ||f - (ell-alpha) dphi/dt - kappa alpha Lap phi + kappa Lap eta*|| / (sqrt(rho) + 1)
///   C_B = sup_t ||gamma theta + nu Lap phi* - beta0(phi*)||
///   C_7 = max(0, sup_t ||theta||_inf - rho * structural_factor)
///   C_6 = max(0, sup_t ||phi - phi*||_inf - rho * structural_factor)
/// where structural_factor = C_str C_Omega |Omega|^{7/6}. Throws
/// std::invalid_argument when the trajectory has no snapshots.
double estimate_constant(const Trajectory& traj, const ProblemSpec& spec, ConstantKind which, double rho,
                         double structural_factor = 0.0);

struct GainThreshold {
  double rho_star = 0.0;
  /// +infinity when rho does not exceed the denominator threshold.
  double t_star = 0.0;
};

/// rho* = C_A^2 + 2 C_A + 2 norm0 / T,   T* = 2 norm0 / (rho - C_A^2 - 2 C_A)
GainThreshold rho_t_star_A(double c_a, double norm0, double T, double rho);
/// rho* = 2 C_B + 2 norm0 / T,           T* = 2 norm0 / (rho - 2 C_B)
GainThreshold rho_t_star_B(double c_b, double norm0, double T, double rho);

struct LocalInputs {
  double gamma = 1.0;
  double c7 = 0.0;
  double nu = 1.0;
  double lap_phistar_inf = 0.0;  // ||Lap phi*||_inf
  double xistar_inf = 0.0;       // ||beta0(phi*)||_inf
  double lipschitz = 1.0;        // L of pi
  double m0 = 0.0;               // ||phi0 - phi*||_inf
  double phistar_inf = 0.0;
  double pi0_abs = 0.0;          // |pi(0)|
  double T = 1.0;
  double rho = 1.0;
  double c_str = 0.0;
  double c_omega = 0.0;
  double omega_measure = 1.0;

  double structural_factor() const;  // C_str C_Omega |Omega|^{7/6}
};

/// Builds the data-dependent part of LocalInputs from the fields of a spec.
LocalInputs local_inputs_from_spec(const ProblemSpec& spec, double c7, double T, double c_omega);

struct LocalThreshold {
  double rho_star = 0.0;
  double t_star = 0.0;
  double m0 = 0.0;
  double m_pi_star = 0.0;  // L (M0 + ||phi*||_inf) + |pi(0)|
  double a_rho = 0.0;      // gamma (K rho + C7) + nu ||Lap phi*|| + ||xi*|| + M_pi*
};

/// Threshold for the local sign feedback. Throws BoundInapplicable when the
/// smallness margin is not positive.
LocalThreshold rho_t_star_C(const LocalInputs& in);

/// Strengthened condition for strict decrease of ||phi - phi*||:
///   rho > (gamma + L) K rho + C_tilde,
///   C_tilde = gamma C7 + L C6 + nu ||Lap phi*|| + ||xi*|| + L ||phi*|| + |pi(0)|.
struct ReinforcedCondition {
  double factor = 0.0;   // (gamma + L) K
  double c_tilde = 0.0;
  double rho_min = 0.0;  // C_tilde / (1 - factor), +inf when factor >= 1
  bool holds = false;
};
ReinforcedCondition reinforced_condition(const LocalInputs& in, double c6);

struct ReportedConstant {
  double value = 0.0;
  std::string provenance;  // "empirical" | "analytic" | "config"
  std::string formula;
};

struct BoundsReport {
  char variant = 'B';
  double c_str = 0.0;
  double c_omega = 0.0;
  std::string c_omega_provenance = "empirical lower estimate";
  double omega_measure = 1.0;
  double smallness_margin = 0.0;
  std::map<std::string, ReportedConstant> constants;
  double pilot_rho = 1.0;
  double rho = 1.0;
  double T = 1.0;
  double norm0 = 0.0;  // ||manifold residual at t=0||_H (A, B)
  double rho_star = 0.0;
  double t_star_pred = 0.0;
  bool applicable = true;
  bool heuristic = false;
  std::string note;
  std::optional<LocalInputs> local_inputs;
  std::optional<LocalThreshold> local;
  std::optional<ReinforcedCondition> reinforced;
};

/// Estimates the constants on a pilot trajectory (run at pilot_rho with
/// snapshots) and evaluates the thresholds at gain `rho`.
BoundsReport assemble_bounds(const ProblemSpec& spec, const Trajectory& pilot, double pilot_rho, double rho,
                             double T, double c_omega);

/// Re-evaluates T* (and A(rho) for the local feedback) at a new gain.
void set_gain(BoundsReport& report, double rho);

nlohmann::json to_json(const BoundsReport& report);
BoundsReport bounds_from_json(const nlohmann::json& j);

}  // namespace pfsmc
