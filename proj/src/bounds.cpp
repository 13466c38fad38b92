#include "pfsmc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pfsmc/errors.hpp"

namespace pfsmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Field nodewise_beta_minimal(const Potential& pot, const Field& v) {
  Field out(v.mesh());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = beta_minimal(pot, v[i]);
  return out;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? nlohmann::json("inf") : nlohmann::json("-inf");
}

}  // namespace

double c_str(const PhysParams& p) {
  const double first = std::sqrt(6.0) / p.nu;
  const double second = p.ell / (std::sqrt(p.kappa) * std::sqrt(p.nu)) + 4.0 * p.ell / p.kappa;
  return 2.0 * std::max(first, second);
}

double smallness_product(const PhysParams& params, double c_omega, double omega_measure) {
  return params.gamma * c_str(params) * c_omega * std::pow(omega_measure, 7.0 / 6.0);
}

double smallness_margin(const PhysParams& params, double c_omega, double omega_measure) {
  return 1.0 - smallness_product(params, c_omega, omega_measure);
}

std::string to_string(ConstantKind kind) {
  switch (kind) {
    case ConstantKind::CA:
      return "C_A";
    case ConstantKind::CB:
      return "C_B";
    case ConstantKind::C6:
      return "C6";
    case ConstantKind::C7:
      return "C7";
  }
  return "?";
}

double estimate_constant(const Trajectory& traj, const ProblemSpec& spec, ConstantKind which, double rho,
                         double structural_factor) {
  if (traj.snapshots.empty()) throw std::invalid_argument("estimate_constant: pilot run has no snapshots");
  const PhysParams& p = spec.params;
  const Mesh& mesh = spec.mesh();
  double sup = 0.0;
  switch (which) {
    case ConstantKind::CA: {
      const auto* a = std::get_if<VariantA>(&spec.variant);
      if (!a) throw std::invalid_argument("C_A is defined for the theta + alpha phi manifold only");
      const Field lap_eta_star = laplacian_neumann(a->eta_star);
      for (const auto& s : traj.snapshots) {
        if (s.t == 0.0) continue;  // no backward difference yet
        Field g = spec.source ? spec.source(s.t) : Field(mesh);
        g.axpy(-(p.ell - a->alpha), s.dphi_dt);
        g.axpy(-p.kappa * a->alpha, laplacian_neumann(s.phi));
        g.axpy(p.kappa, lap_eta_star);
        sup = std::max(sup, l2_norm(g));
      }
      return sup / (std::sqrt(rho) + 1.0);
    }
    case ConstantKind::CB: {
      const Field& phi_star = spec.target();
      Field fixed = laplacian_neumann(phi_star);
      fixed *= p.nu;
      fixed -= nodewise_beta_minimal(spec.potential, phi_star);
      for (const auto& s : traj.snapshots) {
        Field g = fixed;
        g.axpy(p.gamma, s.theta);
        sup = std::max(sup, l2_norm(g));
      }
      return sup;
    }
    case ConstantKind::C7: {
      for (const auto& s : traj.snapshots) sup = std::max(sup, linf_norm(s.theta));
      return std::max(0.0, sup - rho * structural_factor);
    }
    case ConstantKind::C6: {
      for (const auto& s : traj.snapshots) sup = std::max(sup, linf_norm(s.phi - spec.target()));
      return std::max(0.0, sup - rho * structural_factor);
    }
  }
  return 0.0;
}

namespace {

GainThreshold lemma_threshold(double a0, double b0, double norm0, double T, double rho) {
  if (!(norm0 >= 0.0) || !(T > 0.0)) throw std::invalid_argument("threshold: need norm0 >= 0 and T > 0");
  GainThreshold out;
  const double base = a0 * a0 + 2.0 * b0;
  out.rho_star = base + 2.0 * norm0 / T;
  const double denom = rho - base;
  if (norm0 == 0.0 && denom > 0.0)
    out.t_star = 0.0;
  else
    out.t_star = denom > 0.0 ? 2.0 * norm0 / denom : kInf;
  if (rho > out.rho_star && !(out.t_star < T))
    throw std::logic_error("threshold: T* >= T although rho > rho*");
  return out;
}

}  // namespace

GainThreshold rho_t_star_A(double c_a, double norm0, double T, double rho) {
  return lemma_threshold(c_a, c_a, norm0, T, rho);
}

GainThreshold rho_t_star_B(double c_b, double norm0, double T, double rho) {
  return lemma_threshold(0.0, c_b, norm0, T, rho);
}

double LocalInputs::structural_factor() const { return c_str * c_omega * std::pow(omega_measure, 7.0 / 6.0); }

LocalInputs local_inputs_from_spec(const ProblemSpec& spec, double c7, double T, double c_omega) {
  const Field& phi_star = spec.target();
  LocalInputs in;
  in.gamma = spec.params.gamma;
  in.c7 = c7;
  in.nu = spec.params.nu;
  in.lap_phistar_inf = linf_norm(laplacian_neumann(phi_star));
  in.xistar_inf = linf_norm(nodewise_beta_minimal(spec.potential, phi_star));
  in.lipschitz = spec.potential.lipschitz();
  in.m0 = linf_norm(spec.phi0 - phi_star);
  in.phistar_inf = linf_norm(phi_star);
  in.pi0_abs = std::abs(pi_eval(spec.potential, 0.0).value);
  in.T = T;
  in.rho = spec.rho;
  in.c_str = c_str(spec.params);
  in.c_omega = c_omega;
  in.omega_measure = spec.mesh().measure();
  return in;
}

LocalThreshold rho_t_star_C(const LocalInputs& in) {
  const double k = in.structural_factor();
  const double margin = 1.0 - in.gamma * k;
  if (!(margin > 0.0))
    throw BoundInapplicable("local feedback bound needs gamma C_str C_Omega |Omega|^{7/6} < 1 (margin " +
                            std::to_string(margin) + ")");
  LocalThreshold out;
  out.m0 = in.m0;
  out.m_pi_star = in.lipschitz * (in.m0 + in.phistar_inf) + in.pi0_abs;
  const double rest = in.nu * in.lap_phistar_inf + in.xistar_inf + out.m_pi_star;
  out.rho_star = (in.gamma * in.c7 + rest + in.m0 / in.T) / margin;
  out.a_rho = in.gamma * (k * in.rho + in.c7) + rest;
  if (in.m0 == 0.0 && in.rho > out.a_rho)
    out.t_star = 0.0;
  else
    out.t_star = in.rho > out.a_rho ? in.m0 / (in.rho - out.a_rho) : kInf;
  return out;
}

ReinforcedCondition reinforced_condition(const LocalInputs& in, double c6) {
  ReinforcedCondition out;
  const double L = in.lipschitz;
  out.factor = (in.gamma + L) * in.structural_factor();
  out.c_tilde = in.gamma * in.c7 + L * c6 + in.nu * in.lap_phistar_inf + in.xistar_inf + L * in.phistar_inf +
                in.pi0_abs;
  out.rho_min = out.factor < 1.0 ? out.c_tilde / (1.0 - out.factor) : kInf;
  out.holds = in.rho > out.factor * in.rho + out.c_tilde;
  return out;
}

BoundsReport assemble_bounds(const ProblemSpec& spec, const Trajectory& pilot, double pilot_rho, double rho,
                             double T, double c_omega) {
  BoundsReport r;
  r.variant = spec.variant_letter();
  r.c_str = c_str(spec.params);
  r.c_omega = c_omega;
  r.omega_measure = spec.mesh().measure();
  r.smallness_margin = smallness_margin(spec.params, c_omega, r.omega_measure);
  r.pilot_rho = pilot_rho;
  r.T = T;
  r.norm0 = l2_norm(manifold_residual(init_state(spec), spec));

  switch (r.variant) {
    case 'A': {
      const double ca = estimate_constant(pilot, spec, ConstantKind::CA, pilot_rho);
      r.constants["C_A"] = {ca, "empirical",
                            "sup_t ||f-(ell-alpha)dphi/dt-kappa*alpha*Lap(phi)+kappa*Lap(eta*)|| / (sqrt(rho)+1)"};
      break;
    }
    case 'B': {
      const double cb = estimate_constant(pilot, spec, ConstantKind::CB, pilot_rho);
      r.constants["C_B"] = {cb, "empirical", "sup_t ||gamma*theta+nu*Lap(phi*)-beta0(phi*)||"};
      break;
    }
    default: {
      r.heuristic = true;
      LocalInputs in = local_inputs_from_spec(spec, 0.0, T, c_omega);
      const double k = in.structural_factor();
      in.c7 = estimate_constant(pilot, spec, ConstantKind::C7, pilot_rho, k);
      const double c6 = estimate_constant(pilot, spec, ConstantKind::C6, pilot_rho, k);
      r.constants["C7"] = {in.c7, "empirical", "max(0, sup_t ||theta||_inf - rho*C_str*C_Omega*|Omega|^(7/6))"};
      r.constants["C6"] = {c6, "empirical", "max(0, sup_t ||phi-phi*||_inf - rho*C_str*C_Omega*|Omega|^(7/6))"};
      r.local_inputs = in;
      break;
    }
  }
  set_gain(r, rho);
  return r;
}

void set_gain(BoundsReport& r, double rho) {
  r.rho = rho;
  r.applicable = true;
  r.note.clear();
  switch (r.variant) {
    case 'A': {
      const auto g = rho_t_star_A(r.constants.at("C_A").value, r.norm0, r.T, rho);
      r.rho_star = g.rho_star;
      r.t_star_pred = g.t_star;
      break;
    }
    case 'B': {
      const auto g = rho_t_star_B(r.constants.at("C_B").value, r.norm0, r.T, rho);
      r.rho_star = g.rho_star;
      r.t_star_pred = g.t_star;
      break;
    }
    default: {
      LocalInputs& in = *r.local_inputs;
      in.rho = rho;
      try {
        r.local = rho_t_star_C(in);
        r.rho_star = r.local->rho_star;
        r.t_star_pred = r.local->t_star;
      } catch (const BoundInapplicable& e) {
        r.local.reset();
        r.applicable = false;
        r.note = e.what();
        r.rho_star = kInf;
        r.t_star_pred = kInf;
      }
      r.reinforced = reinforced_condition(in, r.constants.at("C6").value);
      break;
    }
  }
  if (r.applicable && !(rho > r.rho_star)) {
    r.applicable = false;
    r.note = "rho does not exceed rho*; no reaching-time guarantee";
  }
}

nlohmann::json to_json(const BoundsReport& r) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kBoundsSchemaVersion;
  j["variant"] = std::string(1, r.variant);
  j["c_str"] = {{"value", r.c_str},
                {"provenance", "analytic"},
                {"formula", "2*max(sqrt(6)/nu, ell/(sqrt(kappa)*sqrt(nu)) + 4*ell/kappa)"}};
  j["c_omega"] = {{"value", r.c_omega},
                  {"provenance", r.c_omega_provenance},
                  {"formula", "sup ||v||_inf/||v||_W over band-limited fields"}};
  j["omega_measure"] = r.omega_measure;
  j["smallness_margin"] = {{"value", r.smallness_margin},
                           {"formula", "1 - gamma*C_str*C_Omega*|Omega|^(7/6)"}};
  json constants = json::object();
  for (const auto& [name, c] : r.constants)
    constants[name] = {{"value", c.value}, {"provenance", c.provenance}, {"formula", c.formula}};
  j["constants"] = constants;
  j["pilot_rho"] = r.pilot_rho;
  j["rho"] = r.rho;
  j["T"] = r.T;
  j["applicable"] = r.applicable;
  j["heuristic"] = r.heuristic;
  if (!r.note.empty()) j["note"] = r.note;

  if (r.variant == 'A' || r.variant == 'B') {
    j["norm0"] = r.norm0;
    const bool a = r.variant == 'A';
    j["rho_star"] = {{"value", number(r.rho_star)},
                     {"formula", a ? "C_A^2 + 2*C_A + (2/T)*||theta0+alpha*phi0-eta*||"
                                   : "2*C_B + (2/T)*||phi0-phi*||"}};
    j["t_star_pred"] = {{"value", number(r.t_star_pred)},
                        {"formula", a ? "2*||theta0+alpha*phi0-eta*|| / (rho - C_A^2 - 2*C_A)"
                                      : "2*||phi0-phi*|| / (rho - 2*C_B)"}};
  } else {
    j["rho_star"] = {{"value", number(r.rho_star)},
                     {"formula",
                      "(gamma*C7 + nu*||Lap phi*||_inf + ||xi*||_inf + M_pi* + M0/T) / "
                      "(1 - gamma*C_str*C_Omega*|Omega|^(7/6))"}};
    j["t_star_pred"] = {{"value", number(r.t_star_pred)}, {"formula", "M0 / (rho - A(rho))"}};
    const LocalInputs& in = *r.local_inputs;
    j["local_inputs"] = {{"gamma", in.gamma},
                         {"C7", in.c7},
                         {"nu", in.nu},
                         {"lap_phistar_inf", in.lap_phistar_inf},
                         {"xistar_inf", in.xistar_inf},
                         {"L", in.lipschitz},
                         {"M0", in.m0},
                         {"phistar_inf", in.phistar_inf},
                         {"pi0_abs", in.pi0_abs},
                         {"T", in.T},
                         {"rho", in.rho},
                         {"c_str", in.c_str},
                         {"c_omega", in.c_omega},
                         {"omega_measure", in.omega_measure}};
    if (r.local) {
      j["aux"] = {{"M0", r.local->m0},
                  {"M_pi_star", {{"value", r.local->m_pi_star}, {"formula", "L*(M0 + ||phi*||_inf) + |pi(0)|"}}},
                  {"A_rho",
                   {{"value", r.local->a_rho},
                    {"formula",
                     "gamma*(C_str*C_Omega*|Omega|^(7/6)*rho + C7) + nu*||Lap phi*||_inf + ||xi*||_inf + "
                     "M_pi*"}}}};
    }
    if (r.reinforced) {
      j["reinforced"] = {{"factor", r.reinforced->factor},
                         {"c_tilde", r.reinforced->c_tilde},
                         {"rho_min", number(r.reinforced->rho_min)},
                         {"holds", r.reinforced->holds},
                         {"formula", "rho > (gamma+L)*C_str*C_Omega*|Omega|^(7/6)*rho + C_tilde"}};
    }
  }
  return j;
}

BoundsReport bounds_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != kBoundsSchemaVersion)
    throw std::runtime_error("bounds json: unsupported schema_version");
  BoundsReport r;
  r.variant = j.at("variant").get<std::string>().at(0);
  r.c_str = j.at("c_str").at("value").get<double>();
  r.c_omega = j.at("c_omega").at("value").get<double>();
  r.c_omega_provenance = j.at("c_omega").at("provenance").get<std::string>();
  r.omega_measure = j.at("omega_measure").get<double>();
  r.smallness_margin = j.at("smallness_margin").at("value").get<double>();
  for (const auto& [name, c] : j.at("constants").items())
    r.constants[name] = {c.at("value").get<double>(), c.at("provenance").get<std::string>(),
                         c.at("formula").get<std::string>()};
  r.pilot_rho = j.at("pilot_rho").get<double>();
  r.T = j.at("T").get<double>();
  r.heuristic = j.at("heuristic").get<bool>();
  if (r.variant == 'A' || r.variant == 'B') {
    r.norm0 = j.at("norm0").get<double>();
  } else {
    const auto& li = j.at("local_inputs");
    LocalInputs in;
    in.gamma = li.at("gamma");
    in.c7 = li.at("C7");
    in.nu = li.at("nu");
    in.lap_phistar_inf = li.at("lap_phistar_inf");
    in.xistar_inf = li.at("xistar_inf");
    in.lipschitz = li.at("L");
    in.m0 = li.at("M0");
    in.phistar_inf = li.at("phistar_inf");
    in.pi0_abs = li.at("pi0_abs");
    in.T = li.at("T");
    in.rho = li.at("rho");
    in.c_str = li.at("c_str");
    in.c_omega = li.at("c_omega");
    in.omega_measure = li.at("omega_measure");
    r.local_inputs = in;
  }
  set_gain(r, j.at("rho").get<double>());
  return r;
}

}  // namespace pfsmc
