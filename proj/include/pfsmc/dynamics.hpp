#pragma once

// Time integration of the controlled Caginalp phase-field systems
//
//   d/dt(theta + ell phi) - kappa Lap theta = f - rho sigma          (A)
//   d/dt phi - nu Lap phi + xi + pi(phi)   = gamma theta
//   sigma in Sign(theta + alpha phi - eta*)
//
//   d/dt(theta + ell phi) - kappa Lap theta = f                      (B), (C)
//   d/dt phi - nu Lap phi + xi + pi(phi)   = gamma theta - rho sigma
//   sigma in Sign(phi - phi*)   (B, nonlocal)   sigma in sign(phi - phi*)   (C, nodewise)
//
// with xi in beta(phi) and homogeneous Neumann conditions.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "pfsmc/grid.hpp"
#include "pfsmc/operators.hpp"

namespace pfsmc {

struct PhysParams {
  double ell = 1.0;
  double kappa = 1.0;
  double nu = 1.0;
  double gamma = 1.0;

  void validate() const;
};

/// Sliding manifold theta + alpha phi = eta*.
struct VariantA {
  double alpha = 1.0;
  Field eta_star;
};
/// Sliding manifold phi = phi*, nonlocal Sign feedback.
struct VariantB {
  Field phi_star;
};
/// Sliding manifold phi = phi*, local sign feedback.
struct VariantC {
  Field phi_star;
};
using Variant = std::variant<VariantA, VariantB, VariantC>;

enum class StepMode { Regularized, Prox };

/// Space-time data evaluated at a given time. An empty function means zero.
using TimeField = std::function<Field(double t)>;

struct ProblemSpec {
  PhysParams params;
  Variant variant = VariantB{Field(Mesh::interval(1.0, 3))};
  double rho = 1.0;
  double eps = 1e-3;
  Potential potential = Potential::regular();
  TimeField source;  // f
  Field theta0 = Field(Mesh::interval(1.0, 3));
  Field phi0 = Field(Mesh::interval(1.0, 3));
  /// Extra right-hand side of the phi equation. Not part of the model; only
  /// manufactured-solution checks set it.
  TimeField phi_forcing;

  const Mesh& mesh() const noexcept { return theta0.mesh(); }
  char variant_letter() const noexcept;
  /// Target field of the manifold: eta* (A) or phi* (B, C).
  const Field& target() const noexcept;
  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

struct State {
  double t = 0.0;
  Field theta;
  Field phi;
  Field xi;     // selection of beta(phi) used by the last step
  Field sigma;  // selection of the feedback used by the last step
};

State init_state(const ProblemSpec& spec);

/// eta = theta + alpha phi - eta* (A) or chi = phi - phi* (B, C).
Field manifold_residual(const State& state, const ProblemSpec& spec);
/// psi = ||manifold_residual||_H
double manifold_distance(const State& state, const ProblemSpec& spec);
/// int (theta + ell phi)
double enthalpy_mass(const State& state, const ProblemSpec& spec);

/// Regularized feedback: Sign_eps of the residual (A, B) or nodewise sign_eps (C).
Field control_term(const State& state, const ProblemSpec& spec);

/// One step of the diffusion-implicit splitting scheme.
State step(const State& state, const ProblemSpec& spec, double dt, StepMode mode);

/// Free energy with specific heat c0_heat; +infinity when phi leaves the
/// effective domain of the potential.
double free_energy(const State& state, const ProblemSpec& spec, double c0_heat = 1.0);

/// dt = min(h^2 / (2 d max(kappa, nu)), eps / (rho + 1)).
double default_time_step(const ProblemSpec& spec);

struct Sample {
  double t = 0.0;
  double psi = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  /// Mass-balance defect over the interval ending at this sample, per |Omega|.
  double balance_residual = 0.0;
  double theta_linf = 0.0;
  double phi_linf = 0.0;
  double theta_l2 = 0.0;
  double dphi_dt_l2 = 0.0;
  // Time averages of int f and int sigma over the interval ending here.
  double source_flux = 0.0;
  double control_flux = 0.0;
};

struct Snapshot {
  double t = 0.0;
  Field theta;
  Field phi;
  Field sigma;
  Field xi;
  Field dphi_dt;  // backward difference of the step ending at t
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<Snapshot> snapshots;
};

struct SimulateOptions {
  double T = 1.0;
  double dt = 1e-3;
  StepMode mode = StepMode::Prox;
  std::size_t sample_every = 10;
  bool keep_snapshots = false;
  double c0_heat = 1.0;
};

/// Runs ceil(T/dt) steps; samples at t = 0, every sample_every steps, and T.
/// Step failures are rethrown as BlowUpError carrying the failing time.
Trajectory simulate(const ProblemSpec& spec, const SimulateOptions& options);

/// Max over sample intervals of the integrated enthalpy-balance defect, per |Omega|.
double balance_residual(const Trajectory& traj, const ProblemSpec& spec);

/// Columns t, psi, mass, energy, balance_residual, theta_linf, phi_linf.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
std::vector<Sample> read_trajectory_csv(std::istream& is);

}  // namespace pfsmc
