#include "difflab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "difflab/stats.hpp"

namespace difflab {

namespace {

double guard_distance(const ManifoldModel& m) {
  return m.kind == ModelKind::Sphere ? 0.9 * std::numbers::pi * m.radius : m.injectivity_radius();
}

}  // namespace

void CouplingConfig::validate(const ManifoldModel& m) const {
  if (!(h > 0.0)) throw std::invalid_argument("CouplingConfig: h must be positive");
  if (!(c > 0.0 && c <= 0.5)) throw std::invalid_argument("CouplingConfig: c must lie in (0, 1/2]");
  if (!(t > 0.0)) throw std::invalid_argument("CouplingConfig: t must be positive");
  if (!(kappa >= 0.0)) throw std::invalid_argument("CouplingConfig: kappa must be >= 0");
  if (!(delta > 0.0)) throw std::invalid_argument("CouplingConfig: delta must be positive");
  if (!(h < guard_distance(m))) throw std::invalid_argument("CouplingConfig: h beyond the injectivity guard");
}

void coupled_step(const ManifoldModel& m, CoupledPair& pair, const CouplingConfig& cfg, double s, double dt,
                  const Tangent& noise) {
  if (pair.coupled()) {
    pair.x = step(m, pair.x, dt, noise);
    pair.xh = pair.x;
    pair.rho = 0.0;
    return;
  }
  const TransportResult tr = transport_and_normal(m, pair.x, pair.xh, noise);
  const double speed = cfg.drift_speed();
  const Tangent xi = speed * tr.normal;
  const double xi_sq = tangent_dot(m, xi, xi);

  const Point x_new = step(m, pair.x, dt, noise);
  Tangent vh = std::sqrt(2.0 * dt) * tr.transported + dt * xi;
  if (m.flat() && !m.potential.is_zero()) vh += dt * drift(m, pair.xh);
  const Point xh_new = exp_map(m, pair.xh, vh);

  pair.girsanov_log += -tangent_dot(m, xi, tr.transported) * std::sqrt(dt / 2.0) - 0.25 * xi_sq * dt;
  pair.quadvar += 0.5 * xi_sq * dt;
  pair.max_xi_sq = std::max(pair.max_xi_sq, xi_sq);

  pair.x = x_new;
  const double rho = distance(m, x_new, xh_new);
  if (rho <= 0.5 * speed * dt) {
    pair.xh = x_new;
    pair.rho = 0.0;
    pair.coupled_at = s + dt;
  } else {
    if (!(rho < guard_distance(m)))
      throw CutLocusError("coupled_step: pair distance " + std::to_string(rho) + " reached the injectivity guard");
    pair.xh = xh_new;
    pair.rho = rho;
  }
  pair.max_rho = std::max(pair.max_rho, pair.rho);
}

CoupledEnsemble simulate_coupled(const ManifoldModel& m, const Point& x0, const Tangent& v,
                                 const CouplingConfig& cfg, const CouplingRun& run,
                                 const std::optional<DomainSpec>& domain, Execution exec) {
  cfg.validate(m);
  validate_point(m, x0);
  validate_tangent(m, x0, v);
  if (std::abs(tangent_norm(m, v) - 1.0) > 1e-10) throw std::invalid_argument("simulate_coupled: v must be a unit vector");
  if (!(run.dt > 0.0)) throw std::invalid_argument("simulate_coupled: dt must be positive");
  if (run.n_pairs < 1) throw std::invalid_argument("simulate_coupled: n_pairs must be >= 1");
  const Point x0h = exp_map(m, x0, cfg.h * v);
  if (domain) {
    domain->validate(m);
    if (!domain->contains(m, x0) || !domain->contains(m, x0h))
      throw std::invalid_argument("simulate_coupled: both start points must be interior");
  }
  CoupledEnsemble ens;
  ens.horizon = run.horizon > 0.0 ? run.horizon : cfg.t;
  ens.h = cfg.h;
  ens.ct = cfg.c * cfg.t;
  const double horizon = ens.horizon, ct = ens.ct, h0 = cfg.h;
  const auto n_steps = static_cast<std::uint32_t>(std::max(1.0, std::ceil(horizon / run.dt - 1e-9)));
  const CounterRng rng(run.seed, run.stream);
  ens.pairs.resize(run.n_pairs);

  for_each_index(run.n_pairs, run.workers, exec, [&](std::size_t i) {
    CoupledPair p;
    p.x = x0;
    p.xh = x0h;
    p.rho = distance(m, x0, x0h);
    p.max_rho = p.rho;
    double s = 0.0;
    for (std::uint32_t k = 0; k < n_steps; ++k) {
      const double dt = (k + 1 == n_steps) ? horizon - s : run.dt;
      if (dt <= 0.0) break;
      const Point x_old = p.x, xh_old = p.xh;
      coupled_step(m, p, cfg, s, dt, draw_noise(m, p.x, rng, i, k, 0));
      if (domain) {
        const double u = rng.uniform(i, k, kBridgeSlot);
        if (!p.tau) {
          const Crossing c = step_crossing(m, *domain, x_old, p.x, dt, u);
          if (c.hit) p.tau = s + c.frac * dt;
        }
        if (!p.tau_h) {
          const Crossing c = step_crossing(m, *domain, xh_old, p.xh, dt, u);
          if (c.hit) p.tau_h = s + c.frac * dt;
        }
      }
      s += dt;
      if (s <= ct * (1 + 1e-12)) {
        const double bound = h0 * (ct - s) / ct;
        ++p.envelope_records;
        if (p.rho > bound + 1e-9 * h0) ++p.envelope_violations;
      }
    }
    ens.pairs[i] = p;
  });
  return ens;
}

GradientEstimate gradient_via_coupling(const ManifoldModel& m, const Point& x0, const Tangent& v,
                                       const TestFunction& f, CouplingConfig cfg, const CouplingRun& run,
                                       const std::optional<DomainSpec>& domain) {
  if (!(cfg.h > 0.0)) cfg.h = 1e-3 * std::sqrt(cfg.t);
  const CoupledEnsemble ens = simulate_coupled(m, x0, v, cfg, run, domain);
  const std::size_t n = ens.pairs.size();
  std::vector<double> d(n), val(n), fl(n);
  for_each_index(n, run.workers, Execution::Parallel, [&](std::size_t i) {
    const auto& p = ens.pairs[i];
    const bool alive = !p.tau;
    const bool alive_h = !p.tau_h;
    const double fx = alive ? f(p.x) : 0.0;
    const double fh = alive_h ? f(p.xh) * std::exp(p.girsanov_log) : 0.0;
    d[i] = (fh - fx) / cfg.h;
    val[i] = fx;
    fl[i] = alive ? fx * std::log(std::max(fx, 1e-300)) : 0.0;
  });
  GradientEstimate g;
  const auto to_est = [](const MeanSe& ms) {
    McEstimate e;
    e.mean = ms.mean;
    e.std_error = ms.std_error;
    e.n = ms.n;
    e.selected = ms.n;
    return e;
  };
  g.derivative = to_est(mean_se(d));
  g.value = to_est(mean_se(val));
  g.f_log_f = to_est(mean_se(fl));
  g.variance_dominated = g.derivative.std_error > std::abs(g.derivative.mean);
  g.derivative.flagged = g.variance_dominated;
  return g;
}

CouplingStats coupling_stats(const CoupledEnsemble& ens, const CouplingConfig& cfg) {
  CouplingStats st;
  const std::size_t n = ens.pairs.size();
  std::vector<double> r(n), rlr(n);
  std::size_t coupled = 0, records = 0, violations = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = ens.pairs[i];
    if (p.coupled_at && *p.coupled_at <= ens.ct * (1 + 1e-9)) ++coupled;
    r[i] = std::exp(p.girsanov_log);
    rlr[i] = r[i] * p.girsanov_log;
    st.max_rho_over_h = std::max(st.max_rho_over_h, p.max_rho / ens.h);
    records += p.envelope_records;
    violations += p.envelope_violations;
    st.max_xi_sq = std::max(st.max_xi_sq, p.max_xi_sq);
  }
  st.coupled_fraction = n ? static_cast<double>(coupled) / n : 0.0;
  const MeanSe mr = mean_se(r), me = mean_se(rlr);
  st.mean_r = mr.mean;
  st.mean_r_se = mr.std_error;
  st.entropy = me.mean;
  st.entropy_se = me.std_error;
  const double a = cfg.kappa + 1.0 / ens.ct;
  st.entropy_bound = 0.5 * cfg.h * cfg.h * a * a * ens.ct;
  st.xi_sq_bound = cfg.h * cfg.h * a * a;
  st.envelope_violation_rate = records ? static_cast<double>(violations) / records : 0.0;
  return st;
}

KsResult reweighted_ks(const CoupledEnsemble& ens, const std::function<double(const Point&)>& stat,
                       std::span<const double> reference) {
  std::vector<double> xs, ws;
  for (const auto& p : ens.pairs) {
    if (p.tau_h) continue;
    xs.push_back(stat(p.xh));
    ws.push_back(std::exp(p.girsanov_log));
  }
  const std::vector<double> unit(reference.size(), 1.0);
  return ks_two_sample_weighted(xs, ws, reference, unit);
}

}  // namespace difflab
