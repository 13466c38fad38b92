#include "pfsmc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pfsmc/errors.hpp"

namespace pfsmc {

namespace fs = std::filesystem;

namespace {

constexpr int kSweepSchemaVersion = 1;

SimulateOptions sim_options(const RunConfig& cfg, bool snapshots) {
  SimulateOptions o;
  o.T = cfg.T;
  o.dt = cfg.dt;
  o.mode = cfg.mode;
  o.sample_every = cfg.sample_every;
  o.keep_snapshots = snapshots;
  return o;
}

double embedding_constant(const RunConfig& cfg) {
  if (cfg.c_omega) return *cfg.c_omega;
  return estimate_embedding_constant(build_mesh(cfg), cfg.c_omega_samples, cfg.seed);
}

// A single run ignores [sweep]; leaving it out of the dump makes a one-cell
// sweep land in the same directory as the equivalent simulate call.
RunConfig without_sweep(RunConfig cfg) {
  cfg.sweep = {};
  return cfg;
}

std::string run_id(const RunConfig& cfg) { return cfg.name + "-" + config_hash(without_sweep(cfg)); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void snapshot_name(char kind, std::size_t k, char* buf, std::size_t n) {
  std::snprintf(buf, n, "%s_%05zu.bin", kind == 't' ? "theta" : "phi", k);
}

RunConfig load_config(const fs::path& path, const CommandOptions& opt) {
  RunConfig cfg = parse_config(path);
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const BlowUpError& e) {
    err << "error: blow-up at t=" << fmt(e.time()) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

int exit_code(const ExtinctionVerdict& v) { return v.status == "fail" ? 2 : 0; }

}  // namespace

BoundsReport compute_bounds(const RunConfig& cfg) {
  const ProblemSpec pilot_spec = build_spec(cfg, cfg.pilot_rho);
  const Trajectory pilot = simulate(pilot_spec, sim_options(cfg, true));
  const double c_omega = embedding_constant(cfg);
  BoundsReport r = assemble_bounds(pilot_spec, pilot, cfg.pilot_rho, cfg.rho.value_or(cfg.pilot_rho), cfg.T, c_omega);
  if (!cfg.rho) {
    const double m = *cfg.rho_multiple;
    if (std::isfinite(r.rho_star) && r.rho_star > 0.0) {
      set_gain(r, m * r.rho_star);
    } else {
      set_gain(r, m * cfg.pilot_rho);
      if (r.rho_star == 0.0) r.note = "rho* is zero; gain taken as rho_multiple * pilot_rho";
    }
  }
  return r;
}

RunOutcome run_experiment(const RunConfig& cfg) {
  RunOutcome run;
  run.run_id = run_id(cfg);
  run.bounds = compute_bounds(cfg);
  run.rho = run.bounds.rho;
  const ProblemSpec spec = build_spec(cfg, run.rho);
  const bool snaps = cfg.variant == 'C' || cfg.snapshots;
  run.trajectory = simulate(spec, sim_options(cfg, snaps));

  VerifyOptions vo;
  vo.tol = cfg.extinction_tol;
  vo.comparison_tol = cfg.comparison_tol;
  vo.mode = cfg.mode;
  vo.check_reinforced_monotone = cfg.reinforced_monotone;
  vo.run_id = run.run_id;
  run.verdict = verify_sliding(run.trajectory, spec, run.bounds, vo);
  return run;
}

fs::path output_root(const RunConfig& cfg, const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv("PFSMC_OUT"); env && *env) return env;
  return cfg.output_dir;
}

fs::path persist_run(const RunConfig& cfg, const RunOutcome& run, const fs::path& root) {
  const fs::path dir = root / run.run_id;
  fs::create_directories(dir);
  write_text(dir / "config.resolved.toml", resolved_toml(without_sweep(cfg)));
  {
    std::ostringstream os;
    write_trajectory_csv(os, run.trajectory);
    write_text(dir / "trajectory.csv", os.str());
  }
  write_text(dir / "bounds.json", to_json(run.bounds).dump(2) + "\n");
  write_text(dir / "verdict.json", to_json(run.verdict).dump(2) + "\n");

  const fs::path snap_dir = dir / "snapshots";
  fs::remove_all(snap_dir);
  if (!run.trajectory.snapshots.empty()) {
    fs::create_directories(snap_dir);
    std::ostringstream index;
    index << "index,t\n";
    char buf[64];
    for (std::size_t k = 0; k < run.trajectory.snapshots.size(); ++k) {
      const auto& s = run.trajectory.snapshots[k];
      index << k << "," << fmt(s.t) << "\n";
      for (char kind : {'t', 'p'}) {
        snapshot_name(kind, k, buf, sizeof buf);
        std::ofstream out(snap_dir / buf, std::ios::binary);
        write_field_binary(out, kind == 't' ? s.theta : s.phi);
        if (!out) throw std::runtime_error("write failed: " + (snap_dir / buf).string());
      }
    }
    write_text(snap_dir / "index.csv", index.str());
  }
  return dir;
}

ExtinctionVerdict reverify_run(const fs::path& dir) {
  const RunConfig cfg = parse_config(dir / "config.resolved.toml");
  const BoundsReport bounds = bounds_from_json(nlohmann::json::parse(read_text(dir / "bounds.json")));
  const ProblemSpec spec = build_spec(cfg, bounds.rho);

  Trajectory traj;
  {
    std::istringstream is(read_text(dir / "trajectory.csv"));
    traj.samples = read_trajectory_csv(is);
  }
  const fs::path snap_dir = dir / "snapshots";
  if (fs::exists(snap_dir / "index.csv")) {
    std::istringstream is(read_text(snap_dir / "index.csv"));
    std::string line;
    std::getline(is, line);
    char buf[64];
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      const std::size_t k = std::stoull(line.substr(0, comma));
      const double t = std::strtod(line.c_str() + comma + 1, nullptr);
      Field fields[2] = {Field(spec.mesh()), Field(spec.mesh())};
      int i = 0;
      for (char kind : {'t', 'p'}) {
        snapshot_name(kind, k, buf, sizeof buf);
        std::ifstream in(snap_dir / buf, std::ios::binary);
        if (!in) throw std::runtime_error("missing snapshot " + (snap_dir / buf).string());
        fields[i++] = read_field_binary(in);
      }
      traj.snapshots.push_back({t, fields[0], fields[1], Field(spec.mesh()), Field(spec.mesh()), Field(spec.mesh())});
    }
  }

  VerifyOptions vo;
  vo.tol = cfg.extinction_tol;
  vo.comparison_tol = cfg.comparison_tol;
  vo.mode = cfg.mode;
  vo.check_reinforced_monotone = cfg.reinforced_monotone;
  vo.run_id = dir.filename().string();
  return verify_sliding(traj, spec, bounds, vo);
}

int cmd_simulate(const fs::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(config, opt);
    const RunOutcome run = run_experiment(cfg);
    const fs::path dir = persist_run(cfg, run, output_root(cfg, opt.out));
    const auto& v = run.verdict;
    out << "run " << dir.string() << "\n"
        << "status " << v.status << " (" << v.label << ")  rho=" << fmt(run.rho)
        << "  rho*=" << fmt(run.bounds.rho_star) << "  T*_pred=" << fmt(v.t_star_pred)
        << "  T*_emp=" << (v.t_star_emp ? fmt(*v.t_star_emp) : std::string("none")) << "\n";
    if (!run.bounds.note.empty()) out << "note " << run.bounds.note << "\n";
    return exit_code(v);
  });
}

int cmd_bounds(const fs::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(config, opt);
    out << to_json(compute_bounds(cfg)).dump(2) << "\n";
    return 0;
  });
}

int cmd_verify(const fs::path& target, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    fs::path dir = target;
    if (!fs::is_directory(target)) {
      const RunConfig cfg = load_config(target, opt);
      dir = output_root(cfg, opt.out) / run_id(cfg);
      if (!fs::is_directory(dir)) throw std::runtime_error("no persisted run at " + dir.string());
    }
    const ExtinctionVerdict v = reverify_run(dir);
    const auto recomputed = to_json(v);
    out << recomputed.dump(2) << "\n";
    const auto stored = nlohmann::json::parse(read_text(dir / "verdict.json"));
    if (stored != recomputed) {
      err << "error: recomputed verdict differs from " << (dir / "verdict.json").string() << "\n";
      return 1;
    }
    return exit_code(v);
  });
}

std::optional<double> fit_loglog_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i]))
      pts.emplace_back(std::log(x[i]), std::log(y[i]));
  if (pts.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (auto [a, b] : pts) {
    mx += a;
    my += b;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0;
  for (auto [a, b] : pts) {
    sxx += (a - mx) * (a - mx);
    sxy += (a - mx) * (b - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  return sxy / sxx;
}

int cmd_sweep(const fs::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig base;
  try {
    base = load_config(config, opt);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (base.sweep.empty()) {
    err << "usage error: [sweep] defines no grid (rho, rho_multiples, eps or nodes)\n";
    return 1;
  }

  struct Gain {
    std::optional<double> rho, multiple;
  };
  std::vector<Gain> gains;
  for (double r : base.sweep.rho) gains.push_back({r, std::nullopt});
  for (double m : base.sweep.rho_multiples) gains.push_back({std::nullopt, m});
  if (gains.empty()) gains.push_back({base.rho, base.rho_multiple});
  std::vector<double> eps = base.sweep.eps;
  if (eps.empty()) eps.push_back(base.eps);
  std::vector<std::size_t> nodes = base.sweep.nodes;
  if (nodes.empty()) nodes.push_back(0);

  std::vector<RunConfig> cells;
  for (auto n : nodes)
    for (double e : eps)
      for (const auto& g : gains) {
        RunConfig c = base;
        c.sweep = {};
        c.rho = g.rho;
        c.rho_multiple = g.multiple;
        c.eps = e;
        if (n) std::fill(c.nodes.begin(), c.nodes.end(), n);
        cells.push_back(std::move(c));
      }

  struct Row {
    std::string run_dir, status, error;
    double rho = NAN, rho_star = NAN, t_pred = NAN;
    std::optional<double> t_emp;
  };
  std::vector<Row> rows(cells.size());
  const fs::path root = output_root(base, opt.out);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Row& row = rows[i];
      try {
        const RunOutcome run = run_experiment(cells[i]);
        row.run_dir = persist_run(cells[i], run, root).string();
        row.rho = run.rho;
        row.rho_star = run.bounds.rho_star;
        row.t_pred = run.verdict.t_star_pred;
        row.t_emp = run.verdict.t_star_emp;
        row.status = run.verdict.status;
      } catch (const BlowUpError& e) {
        row.status = "error";
        row.error = "blow-up at t=" + fmt(e.time());
      } catch (const std::exception& e) {
        row.status = "error";
        row.error = e.what();
      }
      std::lock_guard lock(log_mutex);
      err << "cell " << i << ": " << row.status << (row.error.empty() ? "" : " (" + row.error + ")") << "\n";
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> xs, ys;
  bool any_bad = false;
  std::ostringstream csv;
  csv << "cell,rho,rho_multiple,eps,nodes,rho_star,t_star_pred,t_star_emp,status,run_dir,error\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& c = cells[i];
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    csv << i << "," << fmt(r.rho) << "," << (c.rho_multiple ? fmt(*c.rho_multiple) : "") << "," << fmt(c.eps) << ","
        << c.nodes.front() << "," << fmt(r.rho_star) << "," << fmt(r.t_pred) << ","
        << (r.t_emp ? fmt(*r.t_emp) : "") << "," << r.status << "," << fs::path(r.run_dir).filename().string()
        << "," << error << "\n";
    if (r.status == "fail" || r.status == "error") any_bad = true;
    if (r.status == "pass" && r.t_emp) {
      xs.push_back(r.rho);
      ys.push_back(*r.t_emp);
    }
  }
  const auto exponent = fit_loglog_exponent(xs, ys);

  try {
    const fs::path dir = root / (base.name + "-sweep-" + config_hash(base));
    fs::create_directories(dir);
    write_text(dir / "config.resolved.toml", resolved_toml(base));
    write_text(dir / "summary.csv", csv.str());
    nlohmann::json j;
    j["schema_version"] = kSweepSchemaVersion;
    j["cells"] = rows.size();
    j["fitted_exponent"] = exponent ? nlohmann::json(*exponent) : nlohmann::json(nullptr);
    j["formula"] = "least-squares slope of log(t_star_emp) against log(rho) over passing cells";
    write_text(dir / "summary.json", j.dump(2) + "\n");
    out << "sweep " << dir.string() << "\n" << csv.str();
    out << "fitted exponent of T*_emp vs rho: " << (exponent ? fmt(*exponent) : std::string("n/a")) << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return any_bad ? 2 : 0;
}

}  // namespace pfsmc
