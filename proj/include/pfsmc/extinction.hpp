#pragma once

// Finite-time extinction: the scalar differential-inequality bound, detection
// of the reaching time on sampled data, the barrier w(t) for the local
// feedback, and the assembled sliding verdict.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfsmc/bounds.hpp"
#include "pfsmc/dynamics.hpp"

namespace pfsmc {

inline constexpr int kVerdictSchemaVersion = 1;

struct LemmaBound {
  double s0 = 0.0;            // rho/2 - a0^2/2 - b0
  double t_star_bound = 0.0;  // 2 psi0 / (rho - a0^2 - 2 b0)
};

/// For psi' + rho <= a0 sqrt(rho) + b0 on {psi > 0}. Throws BoundInapplicable
/// unless a0, b0, psi0 >= 0 and rho > a0^2 + 2 b0 + 2 psi0 / T.
LemmaBound lemma_bound(double a0, double b0, double psi0, double rho, double T);

struct TimeSample {
  double t = 0.0;
  double psi = 0.0;
};

std::vector<TimeSample> psi_samples(const Trajectory& traj);

struct ExtinctionMeasurement {
  /// First sample time after which every psi stays <= tol.
  std::optional<double> t_star_emp;
  /// psi drops by more than tol across every sample interval up to t_star_emp.
  bool decreasing_ok = false;
  /// No rebound above tol once psi first reached tol.
  bool stays_zero_ok = false;
};

ExtinctionMeasurement measure_extinction(std::span<const TimeSample> samples, double tol);

/// Every difference quotient over an interval whose endpoints both exceed
/// zero_tol satisfies dpsi/dt <= -s0 + tol.
bool check_slope(std::span<const TimeSample> samples, double s0, double tol, double zero_tol = 1e-9);

/// (M0 - (rho - A) t)^+
double comparison_w(double m0, double rho, double a_rho, double t);

struct VerifyOptions {
  double tol = 1e-9;
  /// Tolerance of the nodewise barrier check |phi - phi*| <= w + tol.
  double comparison_tol = 1e-6;
  StepMode mode = StepMode::Prox;
  bool check_reinforced_monotone = false;
  std::string run_id;
};

struct ExtinctionVerdict {
  std::optional<double> t_star_emp;
  double t_star_pred = 0.0;
  bool decreasing_ok = false;
  bool stays_zero_ok = false;
  bool slope_bound_ok = false;
  double tol = 0.0;

  /// "pass", "fail" or "bound-inapplicable".
  std::string status;
  /// "sliding" (prox) or "eps-sliding" (regularized).
  std::string label;
  double sample_interval = 0.0;
  double slope_s0 = 0.0;
  /// Local feedback only: max over snapshots of |phi - phi*| - w(t).
  std::optional<double> barrier_excess;
  std::optional<bool> barrier_ok;
  /// Set when the strengthened monotonicity check was requested and its condition holds.
  std::optional<bool> reinforced_monotone_ok;
  std::string run_id;

  bool passed() const { return status == "pass"; }
};

/// Throws std::invalid_argument when the local feedback is verified without
/// snapshots or without the local threshold data.
ExtinctionVerdict verify_sliding(const Trajectory& traj, const ProblemSpec& spec, const BoundsReport& bounds,
                                 const VerifyOptions& options);

nlohmann::json to_json(const ExtinctionVerdict& verdict);

}  // namespace pfsmc
