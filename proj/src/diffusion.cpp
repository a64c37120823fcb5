#include "difflab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "difflab/stats.hpp"

namespace difflab {

namespace {

constexpr std::uint32_t kMaxSubsteps = 1024;

std::uint32_t step_count(double duration, double dt) {
  if (duration <= 0.0) return 0;
  const double n = std::ceil(duration / dt - 1e-9);
  if (n > 4.0e9) throw std::invalid_argument("too many time steps");
  return static_cast<std::uint32_t>(std::max(1.0, n));
}

bool advance_1d(const ManifoldModel& m, const DomainSpec& dom, Point& x, double& t, double h,
                const CounterRng& rng, std::uint64_t path, std::uint32_t k, PathResult& out) {
  const Point x2 = step(m, x, h, draw_noise(m, x, rng, path, k, 0));
  const Crossing c = step_crossing(m, dom, x, x2, h, rng.uniform(path, k, kBridgeSlot));
  if (c.hit) {
    out.alive = false;
    out.exit_time = t + c.frac * h;
    out.exit_point = c.point;
    x = c.point;
    return false;
  }
  x = x2;
  t += h;
  return true;
}

// Ball/cap domains: substeps of size min(h, rho^2/8) so the local half-space
// bridge test stays accurate.
bool advance_ball(const ManifoldModel& m, const DomainSpec& dom, bool substep, Point& x, double& t,
                  double h, const CounterRng& rng, std::uint64_t path, std::uint32_t k,
                  PathResult& out) {
  const double floor_step = h / kMaxSubsteps;
  double done = 0.0;
  std::uint32_t sub = 0;
  while (h - done > 1e-15 * h) {
    double hs = h - done;
    if (substep) {
      const double bd = dom.boundary_distance(m, x);
      const double want = bd * bd / 8.0;
      if (want < floor_step) out.flags |= kSubstepFloor;
      hs = std::min(hs, std::max(want, floor_step));
    }
    if (sub + 1 >= kMaxSubsteps) hs = h - done;
    const std::uint32_t slot = sub * kSlotsPerSubstep;
    const Point x2 = step(m, x, hs, draw_noise(m, x, rng, path, k, slot));
    const Crossing c = step_crossing(m, dom, x, x2, hs, rng.uniform(path, k, slot + kBridgeSlot));
    if (c.hit) {
      out.alive = false;
      out.exit_time = t + done + c.frac * hs;
      out.exit_point = c.point;
      x = c.point;
      return false;
    }
    x = x2;
    done += hs;
    ++sub;
  }
  t += h;
  return true;
}

}  // namespace

Tangent draw_noise(const ManifoldModel& m, const Point& x, const CounterRng& rng,
                   std::uint64_t path, std::uint32_t step, std::uint32_t slot) {
  double z[kMaxCoords];
  rng.normals(path, step, slot, std::span<double>(z, static_cast<std::size_t>(m.dim)));
  return tangent_from_frame(m, x, std::span<const double>(z, static_cast<std::size_t>(m.dim)));
}

Crossing step_crossing(const ManifoldModel& m, const DomainSpec& dom, const Point& x1, const Point& x2,
                       double h, double u) {
  Crossing c;
  if (dom.one_dimensional(m)) {
    // Exact for a Brownian bridge of variance 2h: P(touch level) = exp(-d1 d2 / h).
    const double lo = dom.lower(m), hi = dom.upper(m);
    const double d1lo = x1[0] - lo, d1hi = hi - x1[0];
    const double d2lo = x2[0] - lo, d2hi = hi - x2[0];
    if (d2lo <= 0.0 || d2hi <= 0.0) {
      const bool low = d2lo <= 0.0;
      const double d1 = low ? d1lo : d1hi;
      const double d2 = low ? d2lo : d2hi;
      c.hit = true;
      c.frac = d1 / (d1 - d2);
      c.point = Vec{low ? lo : hi};
      return c;
    }
    const double plo = std::exp(-d1lo * d2lo / h);
    const double phi = std::exp(-d1hi * d2hi / h);
    if (u < plo || u < plo + (1.0 - plo) * phi) {
      c.hit = true;
      c.frac = 0.5;
      c.point = Vec{u < plo ? lo : hi};
    }
    return c;
  }
  // Local half-space approximation with boundary distances as the levels.
  const double bd = dom.boundary_distance(m, x1);
  const double bd2 = dom.boundary_distance(m, x2);
  if (bd2 <= 0.0) {
    c.hit = true;
    c.frac = bd / (bd - bd2);
    c.point = dom.project_to_boundary(m, exp_map(m, x1, c.frac * log_map(m, x1, x2)));
    return c;
  }
  if (u < std::exp(-bd * bd2 / h)) {
    c.hit = true;
    c.frac = 0.5;
    c.point = dom.project_to_boundary(m, x2);
  }
  return c;
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
  if (!(t_end > 0.0)) throw std::invalid_argument("SimConfig: t_end must be positive");
  if (dt > t_end) throw std::invalid_argument("SimConfig: dt must not exceed t_end");
  if (n_paths < 1) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
  if (workers < 0) throw std::invalid_argument("SimConfig: workers must be >= 0");
}

std::size_t PathEnsemble::flagged() const noexcept {
  return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](auto f) { return f != kPathOk; }));
}

std::size_t PathEnsemble::survivors() const noexcept {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), std::uint8_t{1}));
}

Point step(const ManifoldModel& m, const Point& x, double dt, const Tangent& noise) {
  Tangent v = std::sqrt(2.0 * dt) * noise;
  if (m.flat() && !m.potential.is_zero()) v += dt * m.potential.gradient(x);
  return exp_map(m, x, v);
}

namespace {

// Scalar loop for the free line with a closed-form drift. Same draws and the
// same floating-point operations as the generic step, so results are identical.
void simulate_line(const ManifoldModel& m, double duration, double dt, std::uint32_t n,
                   const CounterRng& rng, std::uint64_t path_id, PathResult& out) {
  const Potential& pot = m.potential;
  const auto kind = pot.kind();
  const double a = kind == Potential::Kind::Linear ? pot.linear_coeff()[0] : 0.0;
  const double minus_k = -pot.quadratic_k();
  double x = out.x[0];
  double t = 0.0;
  const double s_dt = std::sqrt(2.0 * dt);
  for (std::uint32_t k = 0; k < n; ++k) {
    const double h = (k + 1 == n) ? duration - t : dt;
    if (h <= 0.0) break;
    double z;
    rng.normals(path_id, k, 0, std::span<double>(&z, 1));
    double v = (h == dt ? s_dt : std::sqrt(2.0 * h)) * z;
    if (kind == Potential::Kind::Linear) v += h * a;
    if (kind == Potential::Kind::Quadratic) v += h * (minus_k * x);
    x = x + v;
    t += h;
  }
  out.x[0] = x;
}

}  // namespace

PathResult simulate_path(const ManifoldModel& m, const Point& x0, double duration, double dt,
                         const std::optional<DomainSpec>& domain, bool substep,
                         const CounterRng& rng, std::uint64_t path_id) {
  PathResult out;
  out.x = x0;
  const std::uint32_t n = step_count(duration, dt);
  if (!domain && m.kind == ModelKind::Euclidean && m.dim == 1 && m.potential.kind() != Potential::Kind::Custom) {
    simulate_line(m, duration, dt, n, rng, path_id, out);
    return out;
  }
  double t = 0.0;
  const bool one_d = domain && domain->one_dimensional(m);
  for (std::uint32_t k = 0; k < n; ++k) {
    const double h = (k + 1 == n) ? duration - t : dt;
    if (h <= 0.0) break;
    if (!domain) {
      out.x = step(m, out.x, h, draw_noise(m, out.x, rng, path_id, k, 0));
      t += h;
    } else if (one_d) {
      if (!advance_1d(m, *domain, out.x, t, h, rng, path_id, k, out)) return out;
    } else {
      if (!advance_ball(m, *domain, substep, out.x, t, h, rng, path_id, k, out)) return out;
    }
  }
  return out;
}

namespace {

std::optional<DomainSpec> effective_domain(const ManifoldModel& m, const std::optional<DomainSpec>& d) {
  if (d) {
    d->validate(m);
    return d;
  }
  // Interval1D is the open interval itself: paths are killed at its ends.
  if (m.kind == ModelKind::Interval1D) return DomainSpec::of_model(m);
  return std::nullopt;
}

PathEnsemble collect(std::vector<PathResult>& results, bool with_exits, double t_end) {
  PathEnsemble ens;
  const std::size_t n = results.size();
  ens.t_end = t_end;
  ens.terminal_points.resize(n);
  ens.alive.resize(n);
  ens.weights.assign(n, 1.0);
  ens.flags.resize(n);
  if (with_exits) ens.exits.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    ens.terminal_points[i] = results[i].x;
    ens.alive[i] = results[i].alive ? 1 : 0;
    ens.flags[i] = results[i].flags;
    if (with_exits && !results[i].alive) (*ens.exits)[i] = {results[i].exit_time, results[i].exit_point};
  }
  return ens;
}

}  // namespace

PathEnsemble sample_paths(const ManifoldModel& m, const Point& x0, const SimConfig& cfg,
                          const std::optional<DomainSpec>& domain, Execution exec) {
  cfg.validate();
  validate_point(m, x0);
  const auto dom = effective_domain(m, domain);
  if (dom && !dom->contains(m, x0)) throw std::invalid_argument("sample_paths: start point not interior");
  const CounterRng rng(cfg.seed, cfg.stream);
  std::vector<PathResult> results(cfg.n_paths);
  for_each_index(cfg.n_paths, cfg.workers, exec, [&](std::size_t i) {
    results[i] = simulate_path(m, x0, cfg.t_end, cfg.dt, dom, cfg.substep_near_boundary, rng, i);
  });
  return collect(results, dom.has_value(), cfg.t_end);
}

PathEnsemble sample_paths_from(const ManifoldModel& m, std::span<const Point> starts,
                               std::span<const double> durations, const SimConfig& cfg,
                               const std::optional<DomainSpec>& domain, Execution exec) {
  if (starts.size() != durations.size()) throw std::invalid_argument("sample_paths_from: size mismatch");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("sample_paths_from: dt must be positive");
  const auto dom = effective_domain(m, domain);
  const CounterRng rng(cfg.seed, cfg.stream);
  std::vector<PathResult> results(starts.size());
  for_each_index(starts.size(), cfg.workers, exec, [&](std::size_t i) {
    results[i] = simulate_path(m, starts[i], durations[i], cfg.dt, dom, cfg.substep_near_boundary, rng, i);
  });
  double t_max = 0.0;
  for (double d : durations) t_max = std::max(t_max, d);
  return collect(results, dom.has_value(), t_max);
}

McEstimate mc_functional(const PathEnsemble& ens, const TestFunction& f, Functional mode,
                         Restrict restrict, int workers) {
  const std::size_t n = ens.size();
  std::vector<double> values(n, 0.0);
  std::vector<std::uint8_t> used(n, 0);
  for_each_index(n, workers, Execution::Parallel, [&](std::size_t i) {
    const bool alive = ens.alive[i] != 0;
    const bool take = restrict == Restrict::All || (restrict == Restrict::Survivors && alive) ||
                      (restrict == Restrict::Exited && !alive);
    if (!take) return;
    used[i] = 1;
    const double fx = f(ens.terminal_points[i]);
    const double g = mode == Functional::MeanF ? fx : fx * std::log(std::max(fx, 1e-300));
    values[i] = ens.weights[i] * g;
  });
  McEstimate est;
  est.selected = static_cast<std::size_t>(std::count(used.begin(), used.end(), std::uint8_t{1}));
  if (est.selected == 0) {
    est.flagged = true;
    return est;
  }
  const MeanSe ms = mean_se(values);
  est.mean = ms.mean;
  est.std_error = ms.std_error;
  est.n = ms.n;
  return est;
}

}  // namespace difflab
