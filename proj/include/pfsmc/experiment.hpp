#pragma once

// Run orchestration: pilot run, bounds, controlled run, verdict, persistence
// and sweeps.
//
// Run directory: <root>/<name>-<hash>/
//   config.resolved.toml  trajectory.csv  bounds.json  verdict.json
//   snapshots/index.csv   snapshots/{theta,phi}_NNNNN.bin   (variant C or output.snapshots)

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pfsmc/bounds.hpp"
#include "pfsmc/config.hpp"
#include "pfsmc/extinction.hpp"

namespace pfsmc {

struct RunOutcome {
  std::string run_id;  // <name>-<hash>
  double rho = 0.0;
  BoundsReport bounds;
  Trajectory trajectory;
  ExtinctionVerdict verdict;
};

/// Pilot at pilot_rho, bounds, controlled run at the configured gain, verdict.
/// Propagates BlowUpError.
RunOutcome run_experiment(const RunConfig& cfg);

/// Builds the bounds report from a pilot run. `rho` is the configured gain
/// when set; otherwise rho_multiple * rho* is used.
BoundsReport compute_bounds(const RunConfig& cfg);

/// Output root: `override_dir` if non-empty, else $PFSMC_OUT, else cfg.output_dir.
std::filesystem::path output_root(const RunConfig& cfg, const std::string& override_dir);

std::filesystem::path persist_run(const RunConfig& cfg, const RunOutcome& run, const std::filesystem::path& root);

/// Recomputes the verdict of a persisted run from its files.
ExtinctionVerdict reverify_run(const std::filesystem::path& run_dir);

struct CommandOptions {
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

// Exit codes: 0 pass or bound-inapplicable, 2 verdict fail, 1 runtime error.
int cmd_simulate(const std::filesystem::path& config, const CommandOptions& opt, std::ostream& out,
                 std::ostream& err);
int cmd_sweep(const std::filesystem::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_bounds(const std::filesystem::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err);
/// `target` is either a run directory or a config whose run was persisted.
int cmd_verify(const std::filesystem::path& target, const CommandOptions& opt, std::ostream& out,
               std::ostream& err);

/// Least-squares slope of log y against log x; nullopt with fewer than two
/// distinct positive points.
std::optional<double> fit_loglog_exponent(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pfsmc
