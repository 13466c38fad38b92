#include "pfsmc/extinction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pfsmc/errors.hpp"

namespace pfsmc {

LemmaBound lemma_bound(double a0, double b0, double psi0, double rho, double T) {
  if (!(a0 >= 0.0 && b0 >= 0.0 && psi0 >= 0.0)) throw BoundInapplicable("lemma: a0, b0, psi0 must be >= 0");
  if (!(T > 0.0)) throw BoundInapplicable("lemma: T must be positive");
  if (!(rho > a0 * a0 + 2.0 * b0 + 2.0 * psi0 / T))
    throw BoundInapplicable("lemma: need rho > a0^2 + 2 b0 + 2 psi0 / T");
  LemmaBound out;
  out.s0 = 0.5 * rho - 0.5 * a0 * a0 - b0;
  out.t_star_bound = 2.0 * psi0 / (rho - a0 * a0 - 2.0 * b0);
  if (!(out.s0 > psi0 / T)) throw std::logic_error("lemma: s0 <= psi0 / T under the hypothesis");
  return out;
}

std::vector<TimeSample> psi_samples(const Trajectory& traj) {
  std::vector<TimeSample> out;
  out.reserve(traj.samples.size());
  for (const auto& s : traj.samples) out.push_back({s.t, s.psi});
  return out;
}

ExtinctionMeasurement measure_extinction(std::span<const TimeSample> samples, double tol) {
  ExtinctionMeasurement m;
  if (samples.empty()) return m;

  std::size_t first_touch = samples.size();
  for (std::size_t k = 0; k < samples.size(); ++k)
    if (samples[k].psi <= tol) {
      first_touch = k;
      break;
    }
  if (first_touch < samples.size()) {
    m.stays_zero_ok = std::all_of(samples.begin() + static_cast<std::ptrdiff_t>(first_touch), samples.end(),
                                  [tol](const TimeSample& s) { return s.psi <= tol; });
  }

  // Start of the final run of samples at or below tol.
  std::size_t start = samples.size();
  while (start > 0 && samples[start - 1].psi <= tol) --start;
  if (start < samples.size()) m.t_star_emp = samples[start].t;

  const std::size_t last = m.t_star_emp ? start : samples.size() - 1;
  m.decreasing_ok = true;
  for (std::size_t k = 0; k < last; ++k)
    if (!(samples[k].psi - samples[k + 1].psi > tol)) {
      m.decreasing_ok = false;
      break;
    }
  return m;
}

bool check_slope(std::span<const TimeSample> samples, double s0, double tol, double zero_tol) {
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const auto& a = samples[k];
    const auto& b = samples[k + 1];
    if (a.psi <= zero_tol || b.psi <= zero_tol) continue;
    if ((b.psi - a.psi) / (b.t - a.t) > -s0 + tol) return false;
  }
  return true;
}

double comparison_w(double m0, double rho, double a_rho, double t) {
  return std::max(0.0, m0 - (rho - a_rho) * t);
}

ExtinctionVerdict verify_sliding(const Trajectory& traj, const ProblemSpec& spec, const BoundsReport& bounds,
                                 const VerifyOptions& opt) {
  ExtinctionVerdict v;
  v.run_id = opt.run_id;
  const bool regularized = opt.mode == StepMode::Regularized;
  v.tol = regularized ? std::max(opt.tol, spec.eps) : opt.tol;
  v.label = regularized ? "eps-sliding" : "sliding";
  v.t_star_pred = bounds.t_star_pred;

  const auto samples = psi_samples(traj);
  if (samples.size() < 2) throw std::invalid_argument("verify_sliding: need at least two samples");
  for (std::size_t k = 1; k < samples.size(); ++k)
    v.sample_interval = std::max(v.sample_interval, samples[k].t - samples[k - 1].t);

  const auto m = measure_extinction(samples, v.tol);
  v.t_star_emp = m.t_star_emp;
  v.decreasing_ok = m.decreasing_ok;
  v.stays_zero_ok = m.stays_zero_ok;

  const double rho = spec.rho;
  const bool local = std::holds_alternative<VariantC>(spec.variant);
  if (!local) {
    const bool a = std::holds_alternative<VariantA>(spec.variant);
    const double c = bounds.constants.at(a ? "C_A" : "C_B").value;
    v.slope_s0 = a ? 0.5 * rho - 0.5 * c * c - c : 0.5 * rho - c;
    v.slope_bound_ok = check_slope(samples, v.slope_s0, 0.1 * std::abs(v.slope_s0), v.tol);
  } else if (bounds.local) {
    if (traj.snapshots.empty()) throw std::invalid_argument("verify_sliding: local feedback needs snapshots");
    const auto& lt = *bounds.local;
    v.slope_s0 = rho - lt.a_rho;
    std::vector<TimeSample> sup_samples;
    double excess = -std::numeric_limits<double>::infinity();
    for (const auto& snap : traj.snapshots) {
      const double dist = linf_norm(snap.phi - spec.target());
      sup_samples.push_back({snap.t, dist});
      excess = std::max(excess, dist - comparison_w(lt.m0, rho, lt.a_rho, snap.t));
    }
    v.barrier_excess = excess;
    v.barrier_ok = excess <= opt.comparison_tol;
    v.slope_bound_ok = check_slope(sup_samples, v.slope_s0, 0.1 * std::abs(v.slope_s0), v.tol);
  }

  if (opt.check_reinforced_monotone && local && bounds.reinforced && bounds.reinforced->holds) {
    bool ok = true;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k)
      if (samples[k].psi > v.tol && !(samples[k + 1].psi * samples[k + 1].psi < samples[k].psi * samples[k].psi))
        ok = false;
    v.reinforced_monotone_ok = ok;
  }

  if (!bounds.applicable) {
    v.status = "bound-inapplicable";
    return v;
  }
  if (local && !bounds.local) throw std::invalid_argument("verify_sliding: missing local threshold data");

  bool pass = v.t_star_emp.has_value() && *v.t_star_emp <= v.t_star_pred + v.sample_interval &&
              v.decreasing_ok && v.stays_zero_ok;
  if (v.barrier_ok) pass = pass && *v.barrier_ok;
  if (v.reinforced_monotone_ok) pass = pass && *v.reinforced_monotone_ok;
  v.status = pass ? "pass" : "fail";
  return v;
}

nlohmann::json to_json(const ExtinctionVerdict& v) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kVerdictSchemaVersion;
  j["run_id"] = v.run_id;
  j["status"] = v.status;
  j["label"] = v.label;
  j["t_star_emp"] = v.t_star_emp ? json(*v.t_star_emp) : json(nullptr);
  j["t_star_pred"] = std::isfinite(v.t_star_pred) ? json(v.t_star_pred) : json("inf");
  j["decreasing_ok"] = v.decreasing_ok;
  j["stays_zero_ok"] = v.stays_zero_ok;
  j["slope_bound_ok"] = v.slope_bound_ok;
  j["tol"] = v.tol;
  j["sample_interval"] = v.sample_interval;
  j["slope_s0"] = v.slope_s0;
  if (v.barrier_ok) {
    j["barrier_ok"] = *v.barrier_ok;
    j["barrier_excess"] = *v.barrier_excess;
  }
  if (v.reinforced_monotone_ok) j["reinforced_monotone_ok"] = *v.reinforced_monotone_ok;
  j["formulas"] = {
      {"pass", "t_star_emp <= t_star_pred + sample_interval"},
      {"t_star_emp", "first sample time after which psi <= tol through the final sample"},
      {"slope", "dpsi/dt <= -s0 + 0.1*|s0| on intervals with psi > tol"},
      {"barrier", "|phi - phi*| <= (M0 - (rho - A(rho)) t)^+ + comparison_tol"},
  };
  return j;
}

}  // namespace pfsmc
