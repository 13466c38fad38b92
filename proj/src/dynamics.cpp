#include "pfsmc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pfsmc/errors.hpp"

namespace pfsmc {

namespace {

constexpr double kSolverTol = 1e-10;

Field eval_or_zero(const TimeField& fn, const Mesh& mesh, double t) {
  if (!fn) return Field(mesh);
  Field f = fn(t);
  if (!(f.mesh() == mesh)) throw std::invalid_argument("time-dependent data lives on a different mesh");
  return f;
}

Field map_nodes(const Field& v, auto&& fn) {
  Field out(v.mesh());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fn(v[i]);
  return out;
}

Field pi_field(const Potential& pot, const Field& phi) {
  return map_nodes(phi, [&](double r) { return pi_eval(pot, r).value; });
}

void check_finite(const State& s) {
  if (!s.theta.all_finite() || !s.phi.all_finite()) throw BlowUpError("non-finite state", s.t);
}

}  // namespace

void PhysParams::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(ell, "ell");
  positive(kappa, "kappa");
  positive(nu, "nu");
  positive(gamma, "gamma");
}

char ProblemSpec::variant_letter() const noexcept { return "ABC"[variant.index()]; }

const Field& ProblemSpec::target() const noexcept {
  return std::visit(
      [](const auto& v) -> const Field& {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, VariantA>)
          return v.eta_star;
        else
          return v.phi_star;
      },
      variant);
}

void ProblemSpec::validate() const {
  params.validate();
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be nonnegative");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  require_same_mesh(theta0, phi0);
  require_same_mesh(theta0, target());
  for (double r : phi0.values())
    if (!potential.in_energy_domain(r))
      throw std::invalid_argument("phi0 leaves the effective domain of the " +
                                  std::string(to_string(potential.kind())) + " potential");
  if (variant.index() != 0) {
    for (double r : target().values())
      if (!potential.in_graph_domain(r)) throw std::invalid_argument("phi_star must lie in D(beta) nodewise");
  }
}

State init_state(const ProblemSpec& spec) {
  spec.validate();
  const Mesh& m = spec.mesh();
  return State{0.0, spec.theta0, spec.phi0, Field(m), Field(m)};
}

Field manifold_residual(const State& state, const ProblemSpec& spec) {
  if (const auto* a = std::get_if<VariantA>(&spec.variant)) {
    Field eta = state.theta;
    eta.axpy(a->alpha, state.phi);
    eta -= a->eta_star;
    return eta;
  }
  return state.phi - spec.target();
}

double manifold_distance(const State& state, const ProblemSpec& spec) {
  return l2_norm(manifold_residual(state, spec));
}

double enthalpy_mass(const State& state, const ProblemSpec& spec) {
  return integral(state.theta) + spec.params.ell * integral(state.phi);
}

Field control_term(const State& state, const ProblemSpec& spec) {
  const Field res = manifold_residual(state, spec);
  if (std::holds_alternative<VariantC>(spec.variant))
    return map_nodes(res, [&](double r) { return sign_eps_scalar(spec.eps, r); });
  return sign_eps_field(res, spec.eps);
}

State step(const State& state, const ProblemSpec& spec, double dt, StepMode mode) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const PhysParams& p = spec.params;
  const Mesh& mesh = spec.mesh();
  const double t_next = state.t + dt;
  const bool is_a = std::holds_alternative<VariantA>(spec.variant);
  const bool is_c = std::holds_alternative<VariantC>(spec.variant);

  State next{t_next, state.theta, state.phi, Field(mesh), Field(mesh)};

  // Explicit part of the phi equation: gamma theta - pi(phi) + forcing.
  Field phi_rhs = state.phi;
  phi_rhs.axpy(dt * p.gamma, state.theta);
  phi_rhs.axpy(-dt, pi_field(spec.potential, state.phi));
  if (spec.phi_forcing) phi_rhs.axpy(dt, eval_or_zero(spec.phi_forcing, mesh, t_next));

  if (mode == StepMode::Regularized) {
    next.sigma = control_term(state, spec);
    next.xi = map_nodes(state.phi, [&](double r) { return beta_yosida(spec.potential, spec.eps, r); });
    phi_rhs.axpy(-dt, next.xi);
    if (!is_a) phi_rhs.axpy(-dt * spec.rho, next.sigma);
    next.phi = solve_implicit_diffusion(phi_rhs, dt * p.nu, kSolverTol);
  } else {
    const Field smooth = solve_implicit_diffusion(phi_rhs, dt * p.nu, kSolverTol);
    // beta implicitly: proximal map of dt * beta_hat.
    Field after_beta = map_nodes(smooth, [&](double r) { return resolvent(spec.potential, dt, r); });
    next.xi = smooth - after_beta;
    next.xi *= 1.0 / dt;
    next.phi = after_beta;
    if (!is_a) {
      const Field& target = spec.target();
      const Field chi_hat = after_beta - target;
      const double tau = spec.rho * dt;
      Field chi = is_c ? map_nodes(chi_hat, [&](double r) { return soft_threshold(r, tau); })
                       : ball_shrink(chi_hat, tau);
      next.phi = target + chi;
      if (spec.potential.kind() == PotentialKind::Obstacle)
        for (double& v : next.phi.values()) v = std::clamp(v, -1.0, 1.0);
      if (tau > 0.0) {
        next.sigma = chi_hat - chi;
        next.sigma *= 1.0 / tau;
      }
    }
  }

  // Enthalpy balance for theta with the fresh phi increment.
  Field theta_rhs = state.theta;
  theta_rhs.axpy(dt, eval_or_zero(spec.source, mesh, t_next));
  theta_rhs.axpy(-p.ell, next.phi);
  theta_rhs.axpy(p.ell, state.phi);
  if (is_a && mode == StepMode::Regularized) theta_rhs.axpy(-dt * spec.rho, next.sigma);
  next.theta = solve_implicit_diffusion(theta_rhs, dt * p.kappa, kSolverTol);

  if (is_a && mode == StepMode::Prox) {
    const auto& a = std::get<VariantA>(spec.variant);
    Field eta_hat = next.theta;
    eta_hat.axpy(a.alpha, next.phi);
    eta_hat -= a.eta_star;
    const double tau = spec.rho * dt;
    const Field eta = ball_shrink(eta_hat, tau);
    next.theta = eta + a.eta_star;
    next.theta.axpy(-a.alpha, next.phi);
    if (tau > 0.0) {
      next.sigma = eta_hat - eta;
      next.sigma *= 1.0 / tau;
    }
  }

  check_finite(next);
  return next;
}

double free_energy(const State& state, const ProblemSpec& spec, double c0_heat) {
  const Mesh& m = spec.mesh();
  const double g = spec.params.gamma;
  double bulk = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double th = state.theta[i];
    const double ph = state.phi[i];
    const double F = double_well(spec.potential, ph);
    if (!std::isfinite(F)) return std::numeric_limits<double>::infinity();
    bulk += m.weight(i) * (-0.5 * c0_heat * th * th - g * th * ph + F);
  }
  return bulk + 0.5 * spec.params.nu * gradient_energy(state.phi);
}

double default_time_step(const ProblemSpec& spec) {
  const Mesh& m = spec.mesh();
  double h = m.spacing(0);
  for (int a = 1; a < m.dim(); ++a) h = std::min(h, m.spacing(a));
  const double diff = std::max(spec.params.kappa, spec.params.nu);
  return std::min(h * h / (2.0 * m.dim() * diff), spec.eps / (spec.rho + 1.0));
}

namespace {

Sample make_sample(const State& s, const ProblemSpec& spec, double c0_heat, const Field& dphi_dt) {
  Sample out;
  out.t = s.t;
  out.psi = manifold_distance(s, spec);
  out.mass = enthalpy_mass(s, spec);
  out.energy = free_energy(s, spec, c0_heat);
  out.theta_linf = linf_norm(s.theta);
  out.phi_linf = linf_norm(s.phi);
  out.theta_l2 = l2_norm(s.theta);
  out.dphi_dt_l2 = l2_norm(dphi_dt);
  return out;
}

double interval_residual(const Sample& prev, const Sample& cur, const ProblemSpec& spec) {
  const double dt = cur.t - prev.t;
  double defect = (cur.mass - prev.mass) / dt - cur.source_flux;
  if (std::holds_alternative<VariantA>(spec.variant)) defect += spec.rho * cur.control_flux;
  return std::abs(defect) / spec.mesh().measure();
}

}  // namespace

Trajectory simulate(const ProblemSpec& spec, const SimulateOptions& opt) {
  if (!(opt.T > 0.0) || !(opt.dt > 0.0)) throw std::invalid_argument("simulate: T and dt must be positive");
  if (opt.sample_every < 1) throw std::invalid_argument("simulate: sample_every must be >= 1");
  const Mesh& mesh = spec.mesh();
  const auto steps = static_cast<std::size_t>(std::ceil(opt.T / opt.dt - 1e-9));

  Trajectory traj;
  State state = init_state(spec);
  Field dphi_dt(mesh);
  traj.samples.push_back(make_sample(state, spec, opt.c0_heat, dphi_dt));
  if (opt.keep_snapshots) traj.snapshots.push_back({0.0, state.theta, state.phi, state.sigma, state.xi, dphi_dt});

  double source_acc = 0.0;
  double control_acc = 0.0;
  double t_last_sample = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double t_next = n == steps ? opt.T : static_cast<double>(n) * opt.dt;
    const double h = t_next - state.t;
    State next = [&] {
      try {
        return step(state, spec, h, opt.mode);
      } catch (const BlowUpError&) {
        throw;
      } catch (const std::exception& e) {
        throw BlowUpError(std::string("step failed: ") + e.what(), t_next);
      }
    }();
    next.t = t_next;
    if (spec.source) source_acc += h * integral(spec.source(t_next));
    control_acc += h * integral(next.sigma);
    dphi_dt = next.phi - state.phi;
    dphi_dt *= 1.0 / h;
    state = std::move(next);

    if (n % opt.sample_every == 0 || n == steps) {
      Sample s = make_sample(state, spec, opt.c0_heat, dphi_dt);
      const double span = state.t - t_last_sample;
      s.source_flux = source_acc / span;
      s.control_flux = control_acc / span;
      s.balance_residual = interval_residual(traj.samples.back(), s, spec);
      traj.samples.push_back(s);
      if (opt.keep_snapshots)
        traj.snapshots.push_back({state.t, state.theta, state.phi, state.sigma, state.xi, dphi_dt});
      source_acc = control_acc = 0.0;
      t_last_sample = state.t;
    }
  }
  return traj;
}

double balance_residual(const Trajectory& traj, const ProblemSpec& spec) {
  if (traj.samples.size() < 2) throw std::invalid_argument("balance_residual: need at least two samples");
  double worst = 0.0;
  for (std::size_t k = 1; k < traj.samples.size(); ++k)
    worst = std::max(worst, interval_residual(traj.samples[k - 1], traj.samples[k], spec));
  return worst;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,psi,mass,energy,balance_residual,theta_linf,phi_linf\n";
  char buf[256];
  for (const auto& s : traj.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.psi, s.mass,
                  s.energy, s.balance_residual, s.theta_linf, s.phi_linf);
    os << buf;
  }
}

std::vector<Sample> read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory csv: empty input");
  std::vector<Sample> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double v[7];
    for (double& x : v) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("trajectory csv: short row");
      x = std::stod(cell);
    }
    Sample s;
    s.t = v[0];
    s.psi = v[1];
    s.mass = v[2];
    s.energy = v[3];
    s.balance_residual = v[4];
    s.theta_linf = v[5];
    s.phi_linf = v[6];
    out.push_back(s);
  }
  return out;
}

}  // namespace pfsmc
