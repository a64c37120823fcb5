#include "difflab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

#include "difflab/coupling.hpp"
#include "difflab/dirichlet.hpp"
#include "difflab/pde_oracle.hpp"
#include "difflab/stats.hpp"

namespace difflab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFloor = 1e-6;

[[noreturn]] void reject(const std::string& msg) { throw std::invalid_argument(msg); }

std::vector<double> log_grid(Range r, int n) {
  if (n <= 1) return {r.lo};
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = r.lo * std::pow(r.hi / r.lo, double(i) / (n - 1));
  return g;
}

std::vector<double> lin_grid(Range r, int n) {
  if (n <= 1) return {r.lo};
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = r.lo + (r.hi - r.lo) * i / (n - 1);
  return g;
}

double log_uniform(double u, Range r) { return r.lo * std::pow(r.hi / r.lo, u); }

Tangent frame_vector(const ManifoldModel& m, const Point& x, int k) {
  std::vector<double> c(m.dim, 0.0);
  c[k] = 1.0;
  return tangent_from_frame(m, x, c);
}

// Point at geodesic distance r from the model origin along the first frame axis.
Point point_at(const ManifoldModel& m, double r) {
  const Point o = m.origin();
  if (r == 0.0) return o;
  return exp_map(m, o, r * frame_vector(m, o, 0));
}

Tangent random_unit(const ManifoldModel& m, const Point& x, const CounterRng& rng, std::uint64_t trial,
                    std::uint32_t step) {
  std::vector<double> c(m.dim);
  double z[8];
  rng.normals(trial, step, 0, std::span<double>(z, m.dim));
  double n = 0.0;
  for (int k = 0; k < m.dim; ++k) n += z[k] * z[k];
  n = std::sqrt(n);
  for (int k = 0; k < m.dim; ++k) c[k] = n > 0 ? z[k] / n : (k == 0 ? 1.0 : 0.0);
  return tangent_from_frame(m, x, c);
}

// Coordinates that carry a clipped exponential: the spatial ones.
int random_axis(const ManifoldModel& m, double u) {
  const int first = m.kind == ModelKind::Hyperbolic ? 1 : 0;
  const int count = m.kind == ModelKind::Sphere ? m.dim + 1 : m.dim;
  return first + std::min(count - 1, static_cast<int>(u * count));
}

TestFamilyMember draw_member(const ManifoldModel& m, const Point& base, const CounterRng& rng,
                             std::uint64_t trial, Range lambda, double spread) {
  const auto u = [&](std::uint32_t slot) { return rng.uniform(trial, 0, slot); };
  TestFamilyMember f;
  const int kind = std::min(2, static_cast<int>(3 * u(0)));
  f.kind = static_cast<TestFamilyMember::Kind>(kind);
  f.lambda = (lambda.lo + (lambda.hi - lambda.lo) * u(1)) * (u(2) < 0.5 ? -1.0 : 1.0);
  f.axis = random_axis(m, u(3));
  const double r = spread * u(4);
  f.center = r > 0 ? exp_map(m, base, r * random_unit(m, base, rng, trial, 1)) : base;
  if (f.kind == TestFamilyMember::Kind::Bump) {
    f.width = spread * (0.2 + 0.8 * u(5));
  } else {
    f.width = spread * (0.3 + 0.9 * u(5));
    f.soft = spread * (0.05 + 0.25 * u(6));
  }
  return f;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
};

double coefficient_of_variation(const std::vector<double>& v) {
  if (v.empty()) return kInf;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  if (!(mean > 0.0)) return kInf;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / v.size()) / mean;
}

std::string fmt_index(const std::string& stem, std::size_t i) { return stem + std::to_string(i); }

// ---------------------------------------------------------------------------
// Gradient estimate fits (whole space and Dirichlet).

struct GradientFitSetup {
  std::string tag;
  bool dirichlet = false;
  std::vector<Point> points;
  std::vector<double> ts;
  Range delta, lambda;
  double spread = 1.0;
};

CheckReport gradient_fit(const CheckSpec& spec, const GradientFitSetup& g) {
  const ManifoldModel& m = spec.model;
  CheckReport rep;
  rep.name = g.tag;
  rep.columns = {"point", "t", "delta", "family", "grad", "grad_se", "entropy", "value", "constant"};

  const std::size_t n_pairs = static_cast<std::size_t>(spec.param("n_pairs", 20000));
  const double dt_max = spec.param("dt", g.dirichlet ? 1e-3 : 1e-2);
  // Stability: the envelope is refitted on `batches` disjoint blocks of pairs
  // (independent Monte Carlo replicates of every trial at a point).
  const std::size_t batches = static_cast<std::size_t>(spec.param("batches", 5));
  if (batches < 2 || batches > n_pairs) reject("batches must be in [2, n_pairs]");
  const auto batch_of = [&](const std::vector<double>& v, std::size_t b) {
    const std::size_t lo = b * n_pairs / batches, hi = (b + 1) * n_pairs / batches;
    return std::span<const double>(v.data() + lo, hi - lo);
  };
  const std::size_t cells = g.points.size() * g.ts.size();
  const std::size_t per_cell = (spec.trial_count + cells - 1) / cells;
  const std::uint64_t seed = derive_seed(spec.seed, g.tag);
  const CounterRng trial_rng(derive_seed(spec.seed, g.tag + "-trials"), 0);

  std::vector<double> envelope(g.points.size(), 0.0);
  std::vector<std::vector<double>> subset_env(g.points.size(), std::vector<double>(batches, 0.0));
  std::vector<std::vector<double>> batch_env(g.points.size(), std::vector<double>(batches, 0.0));

  for (std::size_t k = 0; k < g.points.size(); ++k) {
    const Point& x = g.points[k];
    for (std::size_t j = 0; j < g.ts.size(); ++j) {
      const double t = g.ts[j];
      CouplingConfig cc;
      cc.t = t;
      // Pairs split by the boundary contribute O(1/h) to the derivative, so h is
      // larger on domains.
      cc.h = spec.param("h_scale", g.dirichlet ? 0.02 : 1e-3) * std::sqrt(t);
      cc.kappa = m.kappa;
      CouplingRun run;
      run.n_pairs = n_pairs;
      run.dt = std::min(dt_max, t / 50.0);
      run.seed = seed;
      run.stream = k * g.ts.size() + j;  // common noise across directions
      run.workers = spec.workers;
      std::vector<CoupledEnsemble> ens;
      for (int dir = 0; dir < m.dim; ++dir)
        ens.push_back(simulate_coupled(m, x, frame_vector(m, x, dir), cc, run, spec.domain));

      for (std::size_t q = 0; q < per_cell; ++q) {
        const std::size_t local = j * per_cell + q;  // trial index at this point
        const std::uint64_t trial = (k * cells + local);
        const TestFamilyMember f = draw_member(m, x, trial_rng, trial, g.lambda, g.spread);
        const double delta = log_uniform(trial_rng.uniform(trial, 0, 7), g.delta);

        std::vector<double> d(n_pairs), val(n_pairs), fl(n_pairs);
        double g2 = 0.0, g2_var = 0.0;
        std::vector<double> g2_batch(batches, 0.0), g2_var_batch(batches, 0.0);
        for (int dir = 0; dir < m.dim; ++dir) {
          const auto& pairs = ens[dir].pairs;
          for_each_index(n_pairs, spec.workers, Execution::Parallel, [&](std::size_t i) {
            const auto& p = pairs[i];
            const double fx = p.tau ? 0.0 : f(m, p.x);
            const double fh = p.tau_h ? 0.0 : f(m, p.xh) * std::exp(p.girsanov_log);
            d[i] = (fh - fx) / cc.h;
            if (dir == 0) {
              val[i] = fx;
              fl[i] = p.tau ? 0.0 : fx * std::log(fx);
            }
          });
          const MeanSe e = mean_se(d);
          g2 += e.mean * e.mean;
          g2_var += e.mean * e.mean * e.std_error * e.std_error;
          for (std::size_t b = 0; b < batches; ++b) {
            const MeanSe eb = mean_se(batch_of(d, b));
            g2_batch[b] += eb.mean * eb.mean;
            g2_var_batch[b] += eb.mean * eb.mean * eb.std_error * eb.std_error;
          }
        }
        const double grad = std::sqrt(g2);
        const double grad_se = grad > 0 ? std::sqrt(g2_var) / grad : kInf;
        const double pf = mean_se(val).mean;
        const double pflf = mean_se(fl).mean;
        const double ent = pflf - pf * std::log(pf);

        ++rep.trials;
        if (!(pf > 0.0) || !std::isfinite(ent)) {
          ++rep.violations;
          rep.note("non-positive or non-finite semigroup value at trial " + std::to_string(trial));
          continue;
        }
        if (!(grad_se <= grad)) {
          ++rep.skipped;
          continue;
        }
        const double scale = 1.0 / (delta * std::min(t, 1.0)) + 1.0;
        const auto fitted = [&](double gr, double v, double en) {
          const double extra = g.dirichlet ? 0.0 : 2.0 * delta / kE * v;
          return std::max(0.0, gr - delta * en - extra) / (scale * v);
        };
        const double c = fitted(grad, pf, ent);
        envelope[k] = std::max(envelope[k], c);
        subset_env[k][local % batches] = std::max(subset_env[k][local % batches], c);
        for (std::size_t b = 0; b < batches; ++b) {
          const double vb = mean_se(batch_of(val, b)).mean;
          const double eb = mean_se(batch_of(fl, b)).mean - vb * std::log(vb);
          const double gb = std::sqrt(g2_batch[b]);
          // Same skip rule as the full sample, applied to the replicate.
          if (vb > 0.0 && std::isfinite(eb) && gb > 0.0 && std::sqrt(g2_var_batch[b]) <= gb * gb)
            batch_env[k][b] = std::max(batch_env[k][b], fitted(gb, vb, eb));
        }
        rep.confidence.push_back(spec.tolerance_sigma * grad_se / (scale * pf));
        rep.rows.push_back({double(k), t, delta, double(static_cast<int>(f.kind)), grad, grad_se, ent, pf, c});
      }
    }
  }

  const std::string cname = g.dirichlet ? "C" : "F";
  bool ok = rep.violations == 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < g.points.size(); ++k) {
    const double cv = coefficient_of_variation(batch_env[k]);
    rep.fitted_constants[fmt_index(cname + "_x", k)] = envelope[k];
    rep.fitted_constants[fmt_index("cv_x", k)] = cv;
    // Spread over round-robin trial subsets: reflects which test functions
    // were drawn, reported only.
    rep.fitted_constants[fmt_index("trial_subset_cv_x", k)] = coefficient_of_variation(subset_env[k]);
    worst = std::max(worst, envelope[k]);
    const bool good = std::isfinite(envelope[k]) && envelope[k] > 0.0 && cv < 0.5;
    if (!good) rep.note(fmt_index("point ", k) + ": constant not finite/positive or unstable across pair batches");
    ok = ok && good;
  }
  rep.fitted_constants[cname + "_max"] = worst;
  rep.fitted_constants["skipped_fraction"] = rep.trials ? double(rep.skipped) / rep.trials : 0.0;
  rep.pass = ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Local gradient estimate helpers.

}  // namespace

A1Fit fit_a1(const std::function<double(double, std::size_t)>& u, const std::vector<double>& xs,
             const std::vector<double>& ts, double x0, double R, double t0, double T, double K) {
  double sup = 0.0;
  for (double t : ts) {
    if (t < t0 - T - 1e-12 || t > t0 + 1e-12) continue;
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (std::abs(xs[j] - x0) <= R + 1e-12) sup = std::max(sup, u(t, j));
  }
  A1Fit fit;
  const double env = 1.0 / R + 1.0 / std::sqrt(T) + std::sqrt(K);
  for (double t : ts) {
    if (t < t0 - T / 2 - 1e-12 || t > t0 + 1e-12) continue;
    for (std::size_t j = 1; j + 1 < xs.size(); ++j) {
      if (std::abs(xs[j] - x0) > R / 2 + 1e-12) continue;
      const double um = u(t, j - 1), u0 = u(t, j), up = u(t, j + 1);
      if (!(um > 0 && u0 > 0 && up > 0)) continue;
      // Normalised: f = log(u / sup) <= 0.
      const double f = std::log(u0 / sup);
      const double grad = (std::log(up) - std::log(um)) / (xs[j + 1] - xs[j - 1]);
      const double omega = grad * grad / ((1 - f) * (1 - f));
      fit.identity_error =
          std::max(fit.identity_error, std::abs(omega * (1 - f) * (1 - f) - grad * grad) / std::max(1.0, grad * grad));
      fit.c = std::max(fit.c, std::abs(grad) / (env * (1.0 - f)));
      ++fit.evaluated;
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------

std::string to_string(CheckName n) {
  switch (n) {
    case CheckName::Thm11: return "thm11";
    case CheckName::Prop31: return "prop31";
    case CheckName::Harnack: return "harnack";
    case CheckName::KernelBound: return "kernel_bound";
    case CheckName::Lemma25: return "lemma25";
    case CheckName::Varadhan: return "varadhan";
    case CheckName::AppendixA1: return "appendix_a1";
    case CheckName::Lemma22: return "lemma22";
    case CheckName::Lemma23: return "lemma23";
    case CheckName::Lemma22_23: return "lemma22_23";
    case CheckName::Lemma21: return "lemma21";
    case CheckName::Prop25: return "prop25";
  }
  return "?";
}

CheckName check_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(CheckName::Prop25); ++i)
    if (to_string(static_cast<CheckName>(i)) == s) return static_cast<CheckName>(i);
  reject("unknown check '" + s + "'");
}

double CheckSpec::param(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

Range CheckSpec::range(const std::string& key, Range fallback) const {
  const auto it = ranges.find(key);
  return it == ranges.end() ? fallback : it->second;
}

void CheckSpec::validate() const {
  if (trial_count < 1) reject("trial_count must be >= 1");
  if (!(tolerance_sigma > 0.0)) reject("tolerance_sigma must be positive");
  for (const auto& [k, r] : ranges) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) reject("range '" + k + "' must have lo <= hi");
    if (k == "alpha" && !(r.lo > 1.0)) reject("alpha must be > 1");
    if (k == "delta" && !(r.lo > 0.0)) reject("delta must be > 0");
    if (k == "delta" && name == CheckName::KernelBound && !(r.lo > 2.0)) reject("kernel_bound needs delta > 2");
    if (k == "t") {
      const double t_cap = name == CheckName::Prop31 ? 2.0 : 1.0;
      if (!(r.lo > 0.0 && r.hi <= t_cap)) reject("t range must lie in (0, " + std::to_string(int(t_cap)) + "]");
    }
    if (k == "lambda" && !(r.lo >= 0.0)) reject("lambda range must be nonnegative");
  }
  for (const auto& [k, v] : params)
    if (!std::isfinite(v)) reject("parameter '" + k + "' must be finite");
}

double TestFamilyMember::operator()(const ManifoldModel& m, const Point& x) const {
  double v = 0.0;
  switch (kind) {
    case Kind::ClippedExp: v = std::min(std::exp(lambda * x[axis]), clip); break;
    case Kind::Bump: {
      const double r = distance(m, x, center);
      v = std::exp(-r * r / (2.0 * width * width));
      break;
    }
    case Kind::SmoothIndicator: {
      const double r = distance(m, x, center);
      v = 1.0 / (1.0 + std::exp((r - width) / soft));
      break;
    }
  }
  return std::max(v, kFloor);
}

std::string TestFamilyMember::label() const {
  switch (kind) {
    case Kind::ClippedExp: return "clipped_exp";
    case Kind::Bump: return "bump";
    case Kind::SmoothIndicator: return "smooth_indicator";
  }
  return "?";
}

// ---------------------------------------------------------------------------

CheckReport check_thm11(const CheckSpec& spec) {
  const ManifoldModel& m = spec.model;
  if (m.kind == ModelKind::Interval1D) reject("thm11 needs a complete model; use prop31 for domains");
  if (spec.domain) reject("thm11 runs without a domain");
  GradientFitSetup g;
  g.tag = "thm11";
  for (int k = 0; k < static_cast<int>(spec.param("n_points", 3)); ++k)
    g.points.push_back(point_at(m, 0.5 * k));
  g.ts = log_grid(spec.range("t", {0.1, 1.0}), static_cast<int>(spec.param("n_t", 4)));
  g.delta = spec.range("delta", {0.05, 2.0});
  g.lambda = spec.range("lambda", {0.2, 2.0});
  return gradient_fit(spec, g);
}

CheckReport check_prop31(const CheckSpec& spec) {
  const ManifoldModel& m = spec.model;
  CheckSpec s = spec;
  if (!s.domain) {
    if (m.kind != ModelKind::Interval1D) reject("prop31 needs a domain");
    s.domain = DomainSpec::of_model(m);
  }
  s.domain->validate(m);
  GradientFitSetup g;
  g.tag = "prop31";
  g.dirichlet = true;
  const int n_points = static_cast<int>(spec.param("n_points", 3));
  if (s.domain->one_dimensional(m)) {
    // K = middle half of the interval.
    const double lo = s.domain->lower(m), hi = s.domain->upper(m);
    for (int k = 0; k < n_points; ++k) {
      Point p(m.coords());
      p[0] = lo + (hi - lo) * (0.25 + 0.5 * (n_points > 1 ? double(k) / (n_points - 1) : 0.5));
      g.points.push_back(p);
    }
    g.spread = 0.25 * (hi - lo);
  } else {
    const double r = s.domain->geodesic_radius(m);
    const Point c = s.domain->center;
    for (int k = 0; k < n_points; ++k) {
      const double rr = 0.5 * r * (n_points > 1 ? double(k) / (n_points - 1) : 0.0);
      g.points.push_back(rr > 0 ? exp_map(m, c, rr * frame_vector(m, c, 0)) : c);
    }
    g.spread = 0.5 * r;
  }
  g.ts = log_grid(spec.range("t", {0.1, 2.0}), static_cast<int>(spec.param("n_t", 4)));
  g.delta = spec.range("delta", {0.05, 2.0});
  g.lambda = spec.range("lambda", {0.2, 2.0});
  return gradient_fit(s, g);
}

// ---------------------------------------------------------------------------

double exp_family_gradient_constant(const std::vector<double>& lambdas, const std::vector<double>& ts,
                                    const std::vector<double>& deltas) {
  // P_t f = e^{lambda x + lambda^2 t}, |grad P_t f| = lambda P_t f and the
  // entropy term is delta lambda^2 t P_t f.
  double c = 0.0;
  for (double l : lambdas)
    for (double t : ts)
      for (double d : deltas) {
        const double need = l - d * l * l * t - 2.0 * d / kE;
        c = std::max(c, need / (1.0 / (d * std::min(t, 1.0)) + 1.0));
      }
  return c;
}

double exp_family_harnack_constant(double alpha, const std::vector<double>& lambdas,
                                   const std::vector<double>& rhos, const std::vector<double>& ts) {
  // log[(P_t f(x))^alpha / P_t f^alpha(y)] = alpha lambda (x - y) - alpha (alpha - 1) lambda^2 t.
  double c = 0.0;
  for (double l : lambdas)
    for (double r : rhos)
      for (double t : ts) {
        const double lhs = alpha * l * r - alpha * (alpha - 1) * l * l * t - 2.0 * (alpha - 1) / kE;
        const double s = alpha * (alpha * r * r / ((alpha - 1) * std::min(t, 1.0)) + r);
        if (s > 0) c = std::max(c, lhs / s);
      }
  return c;
}

double euclidean_kernel_constant(int d, double delta, double t, const std::vector<double>& rhos) {
  const ManifoldModel m = ManifoldModel::euclidean(d);
  const double log_mu = std::log(volume_ball(m, m.origin(), std::sqrt(2.0 * t)));
  double c = -kInf;
  for (double r : rhos) {
    const double log_p = -0.5 * d * std::log(4 * kPi * t) - r * r / (4 * t);
    c = std::max(c, 0.5 * (log_p + log_mu + r * r / (2 * delta * t)));
  }
  return c;
}

// ---------------------------------------------------------------------------

CheckReport check_harnack(const CheckSpec& spec) {
  const ManifoldModel& m = spec.model;
  if (m.kind == ModelKind::Interval1D || spec.domain) reject("harnack needs a complete model without domain");
  CheckReport rep;
  rep.name = "harnack";
  rep.columns = {"x_index", "y_index", "rho", "t", "alpha", "family", "log_ratio", "sigma", "constant"};

  const Range alpha = spec.range("alpha", {1.5, 4.0});
  const Range lambda = spec.range("lambda", {0.5, 2.0});
  const auto ts = log_grid(spec.range("t", {0.1, 1.0}), static_cast<int>(spec.param("n_t", 3)));
  const std::vector<double> dists = {0.0, 0.3, 0.6, 1.0};
  std::vector<Point> pts;
  for (double r : dists) pts.push_back(point_at(m, r));

  SimConfig cfg;
  cfg.n_paths = static_cast<std::size_t>(spec.param("n_paths", 20000));
  cfg.dt = spec.param("dt", 5e-3);
  cfg.seed = derive_seed(spec.seed, "harnack-paths");
  cfg.workers = spec.workers;
  // Independent ensembles for every (point, t): no common noise between x and y.
  std::vector<std::vector<PathEnsemble>> ens(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < ts.size(); ++j) {
      cfg.t_end = ts[j];
      cfg.stream = i * ts.size() + j;
      ens[i].push_back(sample_paths(m, pts[i], cfg));
    }

  const CounterRng rng(derive_seed(spec.seed, "harnack-trials"), 0);
  double c_fit = 0.0;
  for (std::size_t k = 0; k < spec.trial_count; ++k) {
    const std::size_t tj = k % ts.size();
    const std::size_t xi = std::min(pts.size() - 1, static_cast<std::size_t>(rng.uniform(k, 1, 0) * pts.size()));
    const std::size_t yi = std::min(pts.size() - 1, static_cast<std::size_t>(rng.uniform(k, 1, 1) * pts.size()));
    const double a = log_uniform(rng.uniform(k, 1, 2), alpha);
    const TestFamilyMember f = draw_member(m, pts[xi], rng, k, lambda, 1.0);
    const double t = ts[tj];

    const auto& ex = ens[xi][tj].terminal_points;
    const auto& ey = ens[yi][tj].terminal_points;
    std::vector<double> fx(ex.size()), fya(ey.size());
    for (std::size_t i = 0; i < ex.size(); ++i) fx[i] = f(m, ex[i]);
    for (std::size_t i = 0; i < ey.size(); ++i) fya[i] = std::pow(f(m, ey[i]), a);
    const MeanSe px = mean_se(fx), py = mean_se(fya);
    const double lam = a * std::log(px.mean) - std::log(py.mean);
    const double sigma = std::hypot(a * px.std_error / px.mean, py.std_error / py.mean);
    const double rho = distance(m, pts[xi], pts[yi]);
    ++rep.trials;

    double c = 0.0;
    if (xi == yi) {
      // Jensen on the empirical measure of one ensemble: exact.
      if (lam > 1e-12 * std::max(1.0, std::abs(a * std::log(px.mean)))) {
        ++rep.violations;
        rep.note("Jensen case violated at trial " + std::to_string(k));
      }
    } else if (std::abs(lam) < spec.tolerance_sigma * sigma) {
      ++rep.inconclusive;
    } else {
      const double s = a * (a * rho * rho / ((a - 1) * std::min(t, 1.0)) + rho);
      c = std::max(0.0, lam - 2 * (a - 1) / kE) / s;
      rep.confidence.push_back(spec.tolerance_sigma * sigma / s);
    }
    c_fit = std::max(c_fit, c);
    rep.rows.push_back({double(xi), double(yi), rho, t, a, double(static_cast<int>(f.kind)), lam, sigma, c});
  }
  rep.fitted_constants["C"] = c_fit;
  const std::size_t off_diag = rep.trials - static_cast<std::size_t>(std::count_if(
                                               rep.rows.begin(), rep.rows.end(), [](const auto& r) { return r[0] == r[1]; }));
  rep.fitted_constants["inconclusive_rate"] = off_diag ? double(rep.inconclusive) / off_diag : 0.0;
  bool ok = std::isfinite(c_fit) && rep.violations == 0;
  if (m.kind == ModelKind::Euclidean && m.dim == 1 && m.potential.is_zero()) {
    const auto lams = lin_grid({0.1, 3.0}, 30), rhos = lin_grid({0.1, 2.0}, 20), tt = lin_grid({0.05, 1.0}, 20);
    for (double al : {1.5, 2.0, 4.0}) {
      const double ce = exp_family_harnack_constant(al, lams, rhos, tt);
      rep.fitted_constants["exp_sweep_C_alpha" + std::to_string(al).substr(0, 3)] = ce;
      ok = ok && ce <= 1.0 / (4 * al) + 1e-12;
    }
  }
  rep.pass = ok;
  return rep;
}

// ---------------------------------------------------------------------------

CheckReport check_kernel_bound(const CheckSpec& spec) {
  const ManifoldModel& m = spec.model;
  if (m.kind == ModelKind::Interval1D || spec.domain) reject("kernel_bound needs a complete model without domain");
  CheckReport rep;
  rep.name = "kernel_bound";
  rep.columns = {"delta", "t", "rho", "log_p", "constant"};
  const auto deltas = log_grid(spec.range("delta", {2.1, 8.0}), static_cast<int>(spec.param("n_delta", 3)));
  const auto ts = log_grid(spec.range("t", {0.01, 0.9}), static_cast<int>(spec.param("n_t", 6)));
  const auto rhos = lin_grid({0.0, spec.param("rho_max", 3.0)}, static_cast<int>(spec.param("n_rho", 16)));
  const bool euclid = m.kind == ModelKind::Euclidean && m.potential.is_zero();
  const bool hyp3 = m.kind == ModelKind::Hyperbolic && m.dim == 3;
  const Point x = m.origin();

  // log p_t(x, y_rho) for every (t, rho): closed form or ball-count estimate.
  std::vector<std::vector<double>> log_p(ts.size(), std::vector<double>(rhos.size(), -kInf));
  if (euclid || hyp3) {
    for (std::size_t i = 0; i < ts.size(); ++i)
      for (std::size_t j = 0; j < rhos.size(); ++j) {
        const double t = ts[i], r = rhos[j];
        double lp = -0.5 * m.dim * std::log(4 * kPi * t) - r * r / (4 * t);
        if (hyp3) lp += (r > 0 ? std::log(r / std::sinh(r)) : 0.0) - t;
        log_p[i][j] = lp;
      }
  } else {
    rep.note("density by ball counting; C_delta(t,x) + C_delta(t,y) split equally");
    SimConfig cfg;
    cfg.n_paths = static_cast<std::size_t>(spec.param("n_paths", 200000));
    cfg.dt = spec.param("dt", 1e-3);
    cfg.seed = derive_seed(spec.seed, "kernel_bound-paths");
    cfg.workers = spec.workers;
    const double scale = spec.param("kde_scale", 0.15);
    if (scale > 0.2) rep.note("KDE bias flag: bandwidth exceeds 0.2 sqrt(t)");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      cfg.t_end = ts[i];
      cfg.stream = i;
      const auto ens = sample_paths(m, x, cfg);
      const double b = scale * std::sqrt(ts[i]);
      for (std::size_t j = 0; j < rhos.size(); ++j) {
        if (m.kind == ModelKind::Sphere && rhos[j] >= kPi * m.radius) continue;
        const Point y = point_at(m, rhos[j]);
        std::size_t count = 0;
        for (const auto& p : ens.terminal_points) count += distance(m, p, y) < b;
        if (count < 10) continue;
        log_p[i][j] = std::log(double(count) / (double(cfg.n_paths) * volume_ball(m, y, b)));
      }
    }
  }

  bool ok = true;
  double prev = kInf;
  for (double delta : deltas) {
    double c_delta = -kInf;
    std::vector<double> per_t;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double t = ts[i];
      const double log_mu_x = std::log(volume_ball(m, x, std::sqrt(2 * t)));
      double ct = -kInf;
      for (std::size_t j = 0; j < rhos.size(); ++j) {
        ++rep.trials;
        if (!std::isfinite(log_p[i][j])) {
          ++rep.skipped;
          continue;
        }
        const double r = rhos[j];
        const double log_mu_y = std::log(volume_ball(m, point_at(m, r), std::sqrt(2 * t)));
        const double c = 0.5 * (log_p[i][j] + 0.5 * (log_mu_x + log_mu_y) + r * r / (2 * delta * t));
        ct = std::max(ct, c);
        rep.rows.push_back({delta, t, r, log_p[i][j], c});
      }
      per_t.push_back(ct);
      c_delta = std::max(c_delta, ct);
    }
    const std::string key = std::to_string(delta).substr(0, 4);
    rep.fitted_constants["C_delta" + key] = c_delta;
    // Small-time stability: the two smallest t agree.
    if (per_t.size() >= 2) {
      const double drift = std::abs(per_t[0] - per_t[1]);
      rep.fitted_constants["small_t_drift_delta" + key] = drift;
      if (euclid && drift > 0.05 * std::max(1.0, std::abs(per_t[1]))) {
        ok = false;
        rep.note("C_delta not stable as t -> 0 at delta " + key);
      }
    }
    if (!std::isfinite(c_delta)) ok = false;
    if (c_delta > prev + 1e-12) {
      ok = false;
      rep.note("fitted C_delta increases with delta at " + key);
    }
    prev = c_delta;
  }
  rep.pass = ok;
  return rep;
}

// ---------------------------------------------------------------------------

CheckReport check_lemma25(const CheckSpec& spec) {
  CheckReport rep;
  rep.name = "lemma25";
  rep.columns = {"case", "atoms", "lhs", "rhs", "gap"};
  const CounterRng rng(derive_seed(spec.seed, "lemma25"), 0);
  const std::size_t max_rows = static_cast<std::size_t>(spec.param("max_rows", 20000));
  double worst_rel = -kInf, worst_eq = 0.0;
  std::size_t eq_violations = 0, eq_trials = 0;
  // Draws with mu(f) = 0 are rejected and replaced, so trial_count instances are evaluated.
  for (std::size_t k = 0; rep.trials < spec.trial_count; ++k) {
    const int kase = static_cast<int>(k % 4);  // 0 random psi, 1 psi = 0, 2 equality, 3 one atom
    const int n = 1 + std::min(11, static_cast<int>(rng.uniform(k, 0, 0) * 12));
    std::vector<double> mu(n), f(n), psi(n);
    const int hot = std::min(n - 1, static_cast<int>(rng.uniform(k, 0, 1) * n));
    double muf = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto u = [&](std::uint32_t s) { return rng.uniform(k, 1 + i, s); };
      mu[i] = 0.01 + 2.0 * u(0);
      f[i] = u(1) < 0.2 && kase != 2 ? 0.0 : std::exp(6.0 * u(2) - 3.0);
      if (kase == 3) f[i] = i == hot ? f[i] + 1.0 : 0.0;
      psi[i] = kase == 1 ? 0.0 : 10.0 * u(3) - 5.0;
      muf += f[i] * mu[i];
    }
    if (!(muf > 0.0)) {
      ++rep.skipped;
      continue;
    }
    if (kase == 2)
      for (int i = 0; i < n; ++i) psi[i] = std::log(f[i] / muf);
    double lhs = 0.0, ent = 0.0, abs_terms = 0.0;
    double pmax = -kInf;
    for (int i = 0; i < n; ++i) pmax = std::max(pmax, psi[i]);
    double se = 0.0;
    for (int i = 0; i < n; ++i) {
      se += std::exp(psi[i] - pmax) * mu[i];
      if (f[i] > 0) {
        lhs += psi[i] * f[i] * mu[i];
        const double e = f[i] * std::log(f[i] / muf) * mu[i];
        ent += e;
        abs_terms += std::abs(psi[i] * f[i] * mu[i]) + std::abs(e);
      }
    }
    const double log_int = pmax + std::log(se);
    const double rhs = ent + muf * log_int;
    const double scale = std::max(abs_terms + muf * std::abs(log_int), 1e-300);
    const double gap = (lhs - rhs) / scale;
    ++rep.trials;
    worst_rel = std::max(worst_rel, gap);
    if (gap > 1e-12) {
      ++rep.violations;
      if (rep.notes.size() < 20) rep.note("violation at instance " + std::to_string(k));
    }
    if (kase == 2) {
      ++eq_trials;
      worst_eq = std::max(worst_eq, std::abs(gap));
      if (std::abs(gap) > 1e-10) ++eq_violations;
    }
    if (rep.rows.size() < max_rows) rep.rows.push_back({double(kase), double(n), lhs, rhs, gap});
  }
  rep.fitted_constants["max_relative_gap"] = worst_rel;
  rep.fitted_constants["equality_max_error"] = worst_eq;
  rep.fitted_constants["equality_trials"] = double(eq_trials);
  rep.fitted_constants["equality_violations"] = double(eq_violations);
  if (rep.rows.size() < rep.trials) rep.note("CSV rows truncated to " + std::to_string(rep.rows.size()));
  rep.pass = rep.violations == 0 && eq_violations == 0;
  return rep;
}

// ---------------------------------------------------------------------------

CheckReport check_varadhan(const CheckSpec& spec) {
  const ManifoldModel& m = spec.model;
  CheckReport rep;
  rep.name = "varadhan";
  rep.columns = {"rho", "t", "four_t_log_p"};
  const bool hyp3 = m.kind == ModelKind::Hyperbolic && m.dim == 3;
  const bool euclid = m.kind == ModelKind::Euclidean && m.potential.is_zero();
  const int d = (euclid || hyp3) ? m.dim : std::max(1, m.dim);
  if (!euclid && !hyp3) rep.note("no closed-form kernel for " + m.name() + "; downgraded to Euclidean");
  const auto ts = log_grid(spec.range("t", {0.01, 0.1}), static_cast<int>(spec.param("n_t", 10)));
  const std::vector<double> rhos = {0.0, 0.5, 1.0, 2.0};
  bool ok = true;
  for (double r : rhos) {
    std::vector<std::vector<double>> design;
    std::vector<double> y;
    for (double t : ts) {
      double lp = -0.5 * d * std::log(4 * kPi * t) - r * r / (4 * t);
      if (hyp3) lp += (r > 0 ? std::log(r / std::sinh(r)) : 0.0) - t;
      design.push_back({1.0, t, t * std::log(t), t * t});
      y.push_back(4 * t * lp);
      rep.rows.push_back({r, t, 4 * t * lp});
    }
    const double intercept = least_squares(design, y)[0];
    const double err = std::abs(intercept + r * r);
    const double tol = r > 0 ? 0.05 * r * r : 1e-3;
    ++rep.trials;
    if (err > tol) {
      ++rep.violations;
      ok = false;
    }
    rep.fitted_constants["intercept_rho" + std::to_string(r).substr(0, 3)] = intercept;
    rep.confidence.push_back(err);
  }
  rep.pass = ok;
  return rep;
}

// ---------------------------------------------------------------------------

CheckReport check_appendix_a1(const CheckSpec& spec) {
  CheckReport rep;
  rep.name = "appendix_a1";
  rep.columns = {"solution", "n_x", "c", "evaluated"};
  const double L = spec.param("half_width", 4.0);
  const double R = spec.param("R", 1.0), T = spec.param("T", 0.5), t0 = spec.param("t0", 1.0), x0 = 0.0;
  const int coarse = static_cast<int>(spec.param("n_x_coarse", 256));
  const int fine = static_cast<int>(spec.param("n_x_fine", 512));
  const int n_t = static_cast<int>(spec.param("n_t", 40));
  struct Sol {
    Potential v;
    double source;
  };
  const std::vector<Sol> sols = {{Potential::zero(), 0.0},
                                 {Potential::zero(), 0.7},
                                 {Potential::zero(), -1.5},
                                 {Potential::linear(Vec{0.5}), 0.3},
                                 {Potential::quadratic(-0.5), 1.0}};
  bool ok = true;
  double worst_identity = 0.0;
  std::vector<double> best_coarse, best_fine;
  for (std::size_t s = 0; s < sols.size(); ++s) {
    double cs[2] = {0, 0};
    const int grids[2] = {coarse, fine};
    for (int g = 0; g < 2; ++g) {
      const double dx = 2 * L / grids[g];
      const int node = static_cast<int>(std::lround((sols[s].source + L) / dx)) - 1;
      const auto sol = solve_heat_dirichlet(-L, L, sols[s].v, grids[g], n_t, t0, {node});
      std::vector<double> times;
      for (int i = 0; i <= n_t; ++i) times.push_back(sol.time(i));
      const auto u = [&](double t, std::size_t j) {
        const int ti = static_cast<int>(std::lround(t / sol.dt()));
        return sol.value(0, ti, j);
      };
      const A1Fit fit = fit_a1(u, sol.x, times, x0, R, t0, T, sols[s].v.flat_kappa());
      cs[g] = fit.c;
      worst_identity = std::max(worst_identity, fit.identity_error);
      ++rep.trials;
      rep.rows.push_back({double(s), double(grids[g]), fit.c, double(fit.evaluated)});
      if (!std::isfinite(fit.c) || fit.evaluated == 0) {
        ++rep.violations;
        ok = false;
      }
    }
    best_coarse.push_back(cs[0]);
    best_fine.push_back(cs[1]);
    const double change = std::abs(cs[0] - cs[1]) / std::max(cs[1], 1e-300);
    rep.fitted_constants[fmt_index("c_solution", s)] = cs[1];
    rep.fitted_constants[fmt_index("refinement_change_solution", s)] = change;
    rep.confidence.push_back(change);
    if (change > 0.25) {
      ok = false;
      rep.note(fmt_index("solution ", s) + " changes by more than 25% under refinement");
    }
  }
  const double cmax_c = *std::max_element(best_coarse.begin(), best_coarse.end());
  const double cmax_f = *std::max_element(best_fine.begin(), best_fine.end());
  rep.fitted_constants["c_coarse"] = cmax_c;
  rep.fitted_constants["c_fine"] = cmax_f;
  rep.fitted_constants["c_cv_across_solutions"] = coefficient_of_variation(best_fine);
  rep.fitted_constants["identity_max_error"] = worst_identity;
  if (worst_identity > 1e-12) ok = false;

  // Closed-form Gaussian kernels on the whole line, K = 0.
  double cg = 0.0;
  for (double y : {0.0, 0.5, 1.0, 2.0}) {
    std::vector<double> xs, ts;
    for (int j = 0; j <= 400; ++j) xs.push_back(x0 - R + 2 * R * j / 400.0);
    for (int i = 0; i <= 50; ++i) ts.push_back(t0 - T + T * i / 50.0);
    const auto u = [&](double t, std::size_t j) {
      return std::exp(-(xs[j] - y) * (xs[j] - y) / (4 * t)) / std::sqrt(4 * kPi * t);
    };
    cg = std::max(cg, fit_a1(u, xs, ts, x0, R, t0, T, 0.0).c);
  }
  rep.fitted_constants["c_gaussian"] = cg;
  rep.pass = ok && std::isfinite(cmax_f) && std::abs(cmax_c - cmax_f) <= 0.25 * cmax_f;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

DomainSpec default_interval(const CheckSpec& spec) {
  if (spec.domain) return *spec.domain;
  if (spec.model.kind == ModelKind::Interval1D) return DomainSpec::of_model(spec.model);
  if (spec.model.kind == ModelKind::Euclidean && spec.model.dim == 1) return DomainSpec::interval(0.0, kPi);
  reject("this check needs a domain");
}

// Euclidean line carrying the model potential; Interval1D models are turned
// into the whole line so the killed semigroup is defined by the domain.
ManifoldModel line_model(const ManifoldModel& m) {
  if (m.kind == ModelKind::Interval1D) return ManifoldModel::euclidean(1, m.potential);
  return m;
}

SimConfig sim_from(const CheckSpec& spec, const std::string& tag, double t_end, double n_paths, double dt) {
  SimConfig c;
  c.n_paths = static_cast<std::size_t>(spec.param("n_paths", n_paths));
  c.dt = spec.param("dt", dt);
  c.t_end = t_end;
  c.seed = derive_seed(spec.seed, tag);
  c.workers = spec.workers;
  return c;
}

}  // namespace

CheckReport check_lemma22(const CheckSpec& spec) {
  const ManifoldModel m = line_model(spec.model);
  const DomainSpec d = default_interval(spec);
  const double lo = d.lower(m), hi = d.upper(m);
  const double t = spec.param("t", 0.25);
  Point x0(m.coords());
  x0[0] = lo + spec.param("x0_fraction", 0.5) * (hi - lo);
  DecompositionOptions opt;
  opt.inner_paths = static_cast<std::size_t>(spec.param("inner_paths", 64));
  opt.continuation_dt = spec.param("continuation_dt", 0.0);
  const double mid = 0.5 * (lo + hi);
  const auto f = [mid](const Point& x) { return std::exp(x[0] - mid); };
  auto rep = decomposition_residual(m, d, x0, t, f, sim_from(spec, "lemma22", t, 100000, 1e-3), opt);
  rep.name = "lemma22";
  return rep;
}

CheckReport check_lemma23(const CheckSpec& spec) {
  const ManifoldModel m = line_model(spec.model);
  const DomainSpec d = default_interval(spec);
  const double lo = d.lower(m), hi = d.upper(m);
  const Range tr = spec.range("t", {0.01, 0.5});
  const int n_t = static_cast<int>(spec.param("n_t", 24));
  const double dt = spec.param("dt", 1e-3);
  std::vector<double> grid;
  for (double t : log_grid(tr, n_t)) grid.push_back(std::max(dt, std::round(t / dt) * dt));
  std::vector<CheckReport> parts;
  // Start points far enough from the lower end that several grid times lie in
  // the small-time regime rho^2 / 4t >= 2.
  const std::vector<double> fracs = {0.2, 0.25, 0.3};
  for (std::size_t k = 0; k < fracs.size(); ++k) {
    Point x0(m.coords());
    x0[0] = lo + fracs[k] * (hi - lo);
    auto cfg = sim_from(spec, "lemma23", grid.back(), 200000, dt);
    cfg.stream = k;
    auto r = hitting_tail_check(m, d, x0, grid, cfg, spec.param("stability", 0.25));
    r.name = fmt_index("x", k);
    parts.push_back(std::move(r));
  }
  return merge_reports("lemma23", parts);
}

CheckReport check_lemma22_23(const CheckSpec& spec) {
  return merge_reports("lemma22_23", {check_lemma22(spec), check_lemma23(spec)});
}

CheckReport check_lemma21(const CheckSpec& spec) {
  const DomainSpec d = default_interval(spec);
  const ManifoldModel m = line_model(spec.model);
  const double a = d.lower(m), b = d.upper(m);
  const Potential& v = m.potential;
  const int n_x = static_cast<int>(spec.param("n_x", 512));
  const int n_t = static_cast<int>(spec.param("n_t", 4000));
  const double t_max = spec.param("t_max", 10.0);
  const int node = static_cast<int>(spec.param("source_node", n_x / 2 - 1));
  const auto sol = solve_heat_dirichlet(a, b, v, n_x, n_t, t_max, {node});
  const auto pk = poisson_kernel(a, b, v, n_x);
  const std::vector<double> grid = {0.05, 0.25, 0.5, 1.0, 2.0};
  const double n_mc = spec.param("n_paths", 0.0);
  if (n_mc > 0) {
    const double t_end = spec.param("mc_t_end", 2.0);
    Point x0(m.coords());
    x0[0] = sol.x[node];
    const auto law = hitting_law(m, x0, d, sim_from(spec, "lemma21", t_end, n_mc, 1e-3));
    std::vector<double> taus;
    for (const auto& s : law.samples) taus.push_back(s.tau);
    return lemma21_residual(sol, pk, 0, grid, taus, t_end);
  }
  return lemma21_residual(sol, pk, 0, grid);
}

CheckReport check_prop25(const CheckSpec& spec) {
  const DomainSpec d = default_interval(spec);
  const ManifoldModel m = line_model(spec.model);
  const double a = d.lower(m), b = d.upper(m);
  const int nc = static_cast<int>(spec.param("n_x_coarse", 256));
  const int nf = static_cast<int>(spec.param("n_x_fine", 512));
  const int n_t = static_cast<int>(spec.param("n_t", 100));
  const double t_max = spec.param("t_max", 1.0);
  const std::vector<double> k = {a + 0.25 * (b - a), a + 0.5 * (b - a), a + 0.75 * (b - a)};
  const auto coarse = solve_heat_dirichlet(a, b, m.potential, nc, n_t, t_max, gradient_sources(a, b, nc, k));
  const auto fine = solve_heat_dirichlet(a, b, m.potential, nf, n_t, t_max, gradient_sources(a, b, nf, k));
  auto rep = grad_log_pD_check(coarse, fine, k, spec.param("eps", 0.0), spec.param("stability", 0.10));
  const auto rows = free_space_log_gradient(3.0, 512, {0.02, 0.05, 0.1}, {0.25, 0.5, 1.0});
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.rel_error);
  rep.fitted_constants["free_space_max_rel_error"] = worst;
  if (!(worst < 0.02)) {
    rep.pass = false;
    rep.note("free-space log-gradient deviates from rho/2t by more than 2%");
  }
  return rep;
}

CheckReport run_check(const CheckSpec& spec) {
  spec.validate();
  const Timer timer;
  CheckReport r;
  switch (spec.name) {
    case CheckName::Thm11: r = check_thm11(spec); break;
    case CheckName::Prop31: r = check_prop31(spec); break;
    case CheckName::Harnack: r = check_harnack(spec); break;
    case CheckName::KernelBound: r = check_kernel_bound(spec); break;
    case CheckName::Lemma25: r = check_lemma25(spec); break;
    case CheckName::Varadhan: r = check_varadhan(spec); break;
    case CheckName::AppendixA1: r = check_appendix_a1(spec); break;
    case CheckName::Lemma22: r = check_lemma22(spec); break;
    case CheckName::Lemma23: r = check_lemma23(spec); break;
    case CheckName::Lemma22_23: r = check_lemma22_23(spec); break;
    case CheckName::Lemma21: r = check_lemma21(spec); break;
    case CheckName::Prop25: r = check_prop25(spec); break;
  }
  if (spec.timing) r.runtime_ms = timer.ms();
  return r;
}

}  // namespace difflab
