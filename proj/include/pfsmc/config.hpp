#pragma once

// Run configuration: TOML parsing, validation, defaults and the resolved dump.
//
//   name = "desk-b"            seed = 1
//   [mesh]       lengths = [1.0]   nodes = [129]
//   [physics]    ell kappa nu gamma
//   [potential]  kind = "regular" | "logarithmic" | "obstacle"   c0
//   [problem]    variant = "A" | "B" | "C"   alpha   target | target_file
//                rho | rho_multiple   pilot_rho   eps   mode = "prox" | "regularized"
//   [data]       theta0 phi0 source   (expressions in x, y, z, t or "zero";
//                                      theta0_file, phi0_file for node files)
//   [time]       T dt sample_every
//   [tolerances] extinction comparison reinforced_monotone
//   [bounds]     c_omega | c_omega_samples
//   [output]     dir snapshots
//   [sweep]      rho rho_multiples eps nodes

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pfsmc/dynamics.hpp"
#include "pfsmc/expression.hpp"

namespace pfsmc {

/// A field given by an expression or by a CSV node file.
struct FieldSource {
  std::string expr = "0";
  std::string file;  // resolved against the config directory
};

struct SweepGrid {
  std::vector<double> rho;
  std::vector<double> rho_multiples;
  std::vector<double> eps;
  std::vector<std::size_t> nodes;

  bool empty() const noexcept { return rho.empty() && rho_multiples.empty() && eps.empty() && nodes.empty(); }
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 1;

  std::vector<double> lengths{1.0};
  std::vector<std::size_t> nodes{129};

  PhysParams physics;
  PotentialKind potential = PotentialKind::Regular;
  std::optional<double> c0;

  char variant = 'B';
  std::optional<double> alpha;  // defaults to ell
  FieldSource target;
  std::optional<double> rho;
  std::optional<double> rho_multiple;
  double pilot_rho = 1.0;
  double eps = 1e-3;
  StepMode mode = StepMode::Prox;

  FieldSource theta0;
  FieldSource phi0;
  std::string source = "zero";

  double T = 1.0;
  double dt = 1e-3;
  std::size_t sample_every = 10;

  double extinction_tol = 1e-9;
  double comparison_tol = 1e-6;
  bool reinforced_monotone = false;

  std::optional<double> c_omega;
  std::size_t c_omega_samples = 256;

  std::string output_dir = "runs";
  bool snapshots = false;

  SweepGrid sweep;

  std::filesystem::path base_dir;  // directory of the config file

  /// Throws ConfigError naming the violated key.
  void validate() const;
  double alpha_value() const { return alpha.value_or(physics.ell); }
  double c0_value() const;
};

/// Throws ConfigError: "<path>:<line>:<col>: ..." on TOML syntax errors,
/// "<key>: ..." on schema or validation errors.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir = ".");

/// Full config with every default written out, as TOML.
std::string resolved_toml(const RunConfig& cfg);
/// FNV-1a 64 of the resolved dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

Mesh build_mesh(const RunConfig& cfg);
/// Builds the problem at gain `rho`. Throws ConfigError when an expression or
/// file does not yield a finite field on the mesh.
ProblemSpec build_spec(const RunConfig& cfg, double rho);

}  // namespace pfsmc
