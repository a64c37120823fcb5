#include "difflab/pde_oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "difflab/stats.hpp"

namespace difflab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double pot(const Potential& v, double x) { return v.value(Vec{x}); }

void check_grid(double a, double b, int n_x) {
  if (!(a < b)) throw std::invalid_argument("pde_oracle: need a < b");
  if (n_x < 64) throw std::invalid_argument("pde_oracle: n_x must be >= 64");
}

// Off-diagonal couplings e^{V(x_{j+1/2})} / dx^2 and node weights e^{V(x_j)}.
struct Operator {
  std::vector<double> x, w, flux;  // flux[k] couples nodes k-1 and k (k = 0 .. N), in node indexing with ends
};

Operator build_operator(double a, double b, const Potential& v, int n_x) {
  check_grid(a, b, n_x);
  const double dx = (b - a) / n_x;
  Operator op;
  const int n = n_x - 1;
  op.x.resize(n);
  op.w.resize(n);
  op.flux.resize(n + 1);
  for (int j = 0; j < n; ++j) {
    op.x[j] = a + (j + 1) * dx;
    op.w[j] = std::exp(pot(v, op.x[j]));
  }
  for (int k = 0; k <= n; ++k) op.flux[k] = std::exp(pot(v, a + (k + 0.5) * dx)) / (dx * dx);
  return op;
}

// exp(t A) for A = W^{-1} S. A is Metzler, so with sigma = max |A_jj| the
// shifted matrix P = t A + sigma t I is entrywise nonnegative and
// exp(tA) = e^{-sigma t} exp(P) is accumulated without cancellation.
MatrixXd nonnegative_expm(const Operator& op, double t) {
  const int n = static_cast<int>(op.x.size());
  MatrixXd p = MatrixXd::Zero(n, n);
  double sigma = 0.0;
  for (int j = 0; j < n; ++j) sigma = std::max(sigma, (op.flux[j] + op.flux[j + 1]) / op.w[j]);
  for (int j = 0; j < n; ++j) {
    p(j, j) = t * (sigma - (op.flux[j] + op.flux[j + 1]) / op.w[j]);
    if (j > 0) p(j, j - 1) = t * op.flux[j] / op.w[j];
    if (j + 1 < n) p(j, j + 1) = t * op.flux[j + 1] / op.w[j];
  }
  const double norm = 2.0 * sigma * t;
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.125) ++squarings;
  p /= std::ldexp(1.0, squarings);
  const double shift = std::exp(-sigma * t / std::ldexp(1.0, squarings));
  MatrixXd sum = MatrixXd::Identity(n, n);
  MatrixXd term = MatrixXd::Identity(n, n);
  // |P| <= 1/8: twenty terms leave a remainder below 1e-38.
  for (int k = 1; k <= 20; ++k) {
    term = term * p / static_cast<double>(k);
    sum += term;
  }
  sum *= shift;
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

// Tridiagonal solve (Thomas); lower[j] multiplies u[j-1], upper[j] u[j+1].
std::vector<double> thomas(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                           std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t j = 1; j < n; ++j) {
    if (diag[j - 1] == 0.0) throw std::runtime_error("poisson_kernel: singular tridiagonal system");
    const double m = lower[j] / diag[j - 1];
    diag[j] -= m * upper[j - 1];
    rhs[j] -= m * rhs[j - 1];
  }
  std::vector<double> u(n);
  u[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) u[j] = (rhs[j] - upper[j] * u[j + 1]) / diag[j];
  return u;
}

// Composite trapezoid of samples y on a grid of spacing h, from index 0 to i.
std::vector<double> cumulative_trapezoid(std::span<const double> y, double h) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = 1; i < y.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (y[i - 1] + y[i]);
  return out;
}

}  // namespace

std::size_t GridSolution::source_slot(int node) const {
  for (std::size_t s = 0; s < sources.size(); ++s)
    if (sources[s] == node) return s;
  throw std::out_of_range("GridSolution: node " + std::to_string(node) + " was not tabulated as a source");
}

int GridSolution::node_of(double pos) const {
  const int j = static_cast<int>(std::lround((pos - a) / dx())) - 1;
  return std::clamp(j, 0, static_cast<int>(x.size()) - 1);
}

std::vector<double> GridSolution::mass(std::size_t s) const {
  std::vector<double> out(n_t + 1);
  std::vector<double> terms(x.size());
  for (int i = 0; i <= n_t; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) terms[j] = value(s, i, j) * weight[j] * dx();
    out[i] = pairwise_sum(terms);
  }
  return out;
}

double GridSolution::apply(std::size_t s, int ti, const std::function<double(double)>& f) const {
  std::vector<double> terms(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) terms[j] = value(s, ti, j) * f(x[j]) * weight[j] * dx();
  return pairwise_sum(terms);
}

void GridSolution::write_csv(std::ostream& os, std::size_t s) const {
  os << "t,x,value\n";
  const auto old = os.precision(17);
  for (int i = 0; i <= n_t; ++i)
    for (std::size_t j = 0; j < x.size(); ++j) os << time(i) << ',' << x[j] << ',' << value(s, i, j) << '\n';
  os.precision(old);
}

GridSolution solve_heat_dirichlet(double a, double b, const Potential& v, int n_x, int n_t, double t_max,
                                  std::vector<int> source_nodes) {
  if (n_t < 1 || !(t_max > 0.0)) throw std::invalid_argument("solve_heat_dirichlet: need n_t >= 1, t_max > 0");
  const Operator op = build_operator(a, b, v, n_x);
  const int n = static_cast<int>(op.x.size());
  for (int s : source_nodes)
    if (s < 0 || s >= n) throw std::invalid_argument("solve_heat_dirichlet: source node out of range");
  GridSolution sol;
  sol.a = a;
  sol.b = b;
  sol.n_x = n_x;
  sol.n_t = n_t;
  sol.t_max = t_max;
  sol.potential = v;
  sol.x = op.x;
  sol.weight = op.w;
  sol.sources = std::move(source_nodes);
  const MatrixXd step = nonnegative_expm(op, t_max / n_t);
  const double dx = (b - a) / n_x;
  sol.values.resize(sol.sources.size());
  for (std::size_t s = 0; s < sol.sources.size(); ++s) {
    auto& tab = sol.values[s];
    tab.assign(static_cast<std::size_t>(n_t + 1) * n, 0.0);
    VectorXd u = VectorXd::Zero(n);
    u(sol.sources[s]) = 1.0 / (op.w[sol.sources[s]] * dx);
    for (int i = 0; i <= n_t; ++i) {
      if (i > 0) u = step * u;
      for (int j = 0; j < n; ++j) {
        if (u(j) < -1e-12) throw std::runtime_error("solve_heat_dirichlet: negative kernel value");
        tab[static_cast<std::size_t>(i) * n + j] = std::max(u(j), 0.0);
      }
    }
  }
  return sol;
}

std::vector<double> heat_kernel_matrix(double a, double b, const Potential& v, int n_x, double t) {
  const Operator op = build_operator(a, b, v, n_x);
  const MatrixXd e = nonnegative_expm(op, t);
  const int n = static_cast<int>(op.x.size());
  const double dx = (b - a) / n_x;
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  // Column i of exp(tA) is the solution from the delta 1 at node i.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] = e(j, i) / (op.w[i] * dx);
  return out;
}

PoissonKernelTable poisson_kernel(double a, double b, const Potential& v, int n_x) {
  const Operator op = build_operator(a, b, v, n_x);
  const std::size_t n = op.x.size();
  PoissonKernelTable pk;
  pk.a = a;
  pk.b = b;
  pk.x = op.x;
  pk.nu_a = std::exp(pot(v, a));
  pk.nu_b = std::exp(pot(v, b));
  std::vector<double> lower(n), diag(n), upper(n);
  for (std::size_t j = 0; j < n; ++j) {
    lower[j] = op.flux[j];
    upper[j] = op.flux[j + 1];
    diag[j] = -(op.flux[j] + op.flux[j + 1]);
  }
  std::vector<double> rhs_a(n, 0.0), rhs_b(n, 0.0);
  rhs_a[0] = -op.flux[0] / pk.nu_a;
  rhs_b[n - 1] = -op.flux[n] / pk.nu_b;
  pk.k_a = thomas(lower, diag, upper, rhs_a);
  pk.k_b = thomas(lower, diag, upper, rhs_b);
  return pk;
}

std::vector<double> time_derivative(std::span<const double> u, double dt) {
  const std::size_t n = u.size();
  if (n < 5) throw std::invalid_argument("time_derivative: need at least 5 samples");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 2 && i + 2 < n) {
      d[i] = (u[i - 2] - 8 * u[i - 1] + 8 * u[i + 1] - u[i + 2]) / (12 * dt);
    } else if (i < 2) {
      // Forward stencils of order four at offsets 0 and 1.
      if (i == 0)
        d[i] = (-25 * u[0] + 48 * u[1] - 36 * u[2] + 16 * u[3] - 3 * u[4]) / (12 * dt);
      else
        d[i] = (-3 * u[0] - 10 * u[1] + 18 * u[2] - 6 * u[3] + u[4]) / (12 * dt);
    } else {
      const std::size_t k = n - 1;
      if (i == k)
        d[i] = (25 * u[k] - 48 * u[k - 1] + 36 * u[k - 2] - 16 * u[k - 3] + 3 * u[k - 4]) / (12 * dt);
      else
        d[i] = (3 * u[k] + 10 * u[k - 1] - 18 * u[k - 2] + 6 * u[k - 3] - u[k - 4]) / (12 * dt);
    }
  }
  return d;
}

double oracle_exit_cdf(const GridSolution& sol, std::size_t s, double t) {
  const auto m = sol.mass(s);
  if (t <= 0.0) return 0.0;
  if (t >= sol.t_max) return 1.0 - m.back();
  const double pos = t / sol.dt();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return 1.0 - ((1 - frac) * m[i] + frac * m[std::min(i + 1, m.size() - 1)]);
}

CheckReport lemma21_residual(const GridSolution& sol, const PoissonKernelTable& pk, std::size_t s,
                             const std::vector<double>& t_grid, std::span<const double> mc_taus,
                             double mc_t_end) {
  if (pk.x.size() != sol.x.size()) throw std::invalid_argument("lemma21_residual: grid mismatch");
  CheckReport r;
  r.name = "lemma21";
  const std::size_t nx = sol.size();
  const int nt = sol.n_t;
  const double dt = sol.dt(), dx = sol.dx();
  const int src = sol.sources[s];

  // Q_z(t) = int p_t(x, y) K(z, y) mu(dy) for both boundary points.
  std::vector<double> qa(nt + 1), qb(nt + 1);
  std::vector<double> ta(nx), tb(nx);
  for (int i = 0; i <= nt; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      const double pm = sol.value(s, i, j) * sol.weight[j] * dx;
      ta[j] = pm * pk.k_a[j];
      tb[j] = pm * pk.k_b[j];
    }
    qa[i] = pairwise_sum(ta);
    qb[i] = pairwise_sum(tb);
  }
  const auto ha_neg = time_derivative(qa, dt);
  const auto hb_neg = time_derivative(qb, dt);
  std::vector<double> ha(nt + 1), hb(nt + 1), ell(nt + 1);
  double h_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= nt; ++i) {
    ha[i] = -ha_neg[i];
    hb[i] = -hb_neg[i];
    ell[i] = ha[i] * pk.nu_a + hb[i] * pk.nu_b;
    h_min = std::min({h_min, ha[i], hb[i]});
  }
  const auto ia = cumulative_trapezoid(ha, dt);
  const auto ib = cumulative_trapezoid(hb, dt);
  const auto il = cumulative_trapezoid(ell, dt);
  const auto mass = sol.mass(s);

  // Exit-time density from the mass rate; must agree with the boundary-flux form.
  const auto mass_rate = time_derivative(mass, dt);

  double identity_max = 0.0, balance_max = 0.0, flux_max = 0.0;
  std::size_t dropped = 0;
  r.columns = {"t", "identity_residual_a", "identity_residual_b", "mass_balance", "ell"};
  for (double t : t_grid) {
    const auto i = static_cast<long>(std::lround(t / dt));
    if (t < 4 * dt || i > nt) {
      ++dropped;
      continue;
    }
    const double ra = std::abs(pk.k_a[src] - qa[i] - ia[i]);
    const double rb = std::abs(pk.k_b[src] - qb[i] - ib[i]);
    const double bal = std::abs((1.0 - mass[i]) - il[i]);
    identity_max = std::max({identity_max, ra, rb});
    balance_max = std::max(balance_max, bal);
    flux_max = std::max(flux_max, std::abs(ell[i] + mass_rate[i]));
    r.rows.push_back({static_cast<double>(i) * dt, ra, rb, bal, ell[i]});
    r.confidence.push_back(std::max(ra, rb));
    ++r.trials;
  }
  if (dropped) r.note(std::to_string(dropped) + " t-grid points below 4 dt or beyond t_max dropped");

  // Tail beyond t_max: l decays like e^{-lambda_1 t}.
  double tail = 0.0;
  if (mass[nt] > 0.0 && mass[nt - 1] > mass[nt]) {
    const double lambda1 = std::log(mass[nt - 1] / mass[nt]) / dt;
    tail = ell[nt] / lambda1;
    r.fitted_constants["lambda1"] = lambda1;
  }
  const double ell_total = il[nt] + tail;
  r.fitted_constants["identity_residual_max"] = identity_max;
  r.fitted_constants["mass_balance_max"] = balance_max;
  r.fitted_constants["flux_consistency_max"] = flux_max;
  r.fitted_constants["ell_integral"] = ell_total;
  r.fitted_constants["h_min"] = h_min;

  bool ok = r.trials > 0;
  if (!(identity_max < 1e-3)) ok = false, r.note("integrated identity residual above 1e-3");
  if (!(std::abs(ell_total - 1.0) <= 1e-3)) ok = false, r.note("integral of the exit-time density off by more than 1e-3");
  if (!(balance_max < 1e-3)) ok = false, r.note("mass balance off by more than 1e-3");
  if (!(h_min >= -1e-8)) ok = false, r.note("negative exit density");

  if (!mc_taus.empty()) {
    const double end = mc_t_end > 0.0 ? mc_t_end : sol.t_max;
    const double norm = oracle_exit_cdf(sol, s, end);
    const auto m = sol.mass(s);
    const auto cdf = [&](double t) {
      if (t <= 0.0) return 0.0;
      if (t >= end) return 1.0;
      const double pos = t / dt;
      const auto i = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(i);
      return (1.0 - ((1 - frac) * m[i] + frac * m[std::min(i + 1, m.size() - 1)])) / norm;
    };
    const KsResult ks = ks_one_sample(std::vector<double>(mc_taus.begin(), mc_taus.end()), cdf);
    r.fitted_constants["ks_statistic"] = ks.statistic;
    r.fitted_constants["ks_p"] = ks.p_value;
    if (!(ks.p_value > 1e-3)) ok = false, r.note("Monte Carlo exit times disagree with the oracle law");
  }
  r.violations = ok ? 0 : 1;
  r.pass = ok;
  return r;
}

std::vector<int> gradient_sources(double a, double b, int n_x, const std::vector<double>& k_set) {
  const double dx = (b - a) / n_x;
  std::vector<int> out;
  for (double k : k_set) {
    const int j = static_cast<int>(std::lround((k - a) / dx)) - 1;
    if (j < 1 || j > n_x - 3) throw std::invalid_argument("gradient_sources: point too close to the boundary");
    for (int d : {-1, 0, 1})
      if (std::find(out.begin(), out.end(), j + d) == out.end()) out.push_back(j + d);
  }
  return out;
}

std::vector<int> gradient_sources(const GridSolution& layout, const std::vector<double>& k_set) {
  return gradient_sources(layout.a, layout.b, layout.n_x, k_set);
}

GradLogFit fit_grad_log_constant(const GridSolution& sol, const std::vector<double>& k_set, double eps,
                                 double t_lo, double t_hi) {
  GradLogFit fit;
  fit.c = -std::numeric_limits<double>::infinity();
  const double dx = sol.dx();
  for (double k : k_set) {
    const int j = sol.node_of(k);
    const std::size_t sm = sol.source_slot(j - 1), sp = sol.source_slot(j + 1);
    const double xk = sol.x[j];
    for (int i = 1; i <= sol.n_t; ++i) {
      const double t = sol.time(i);
      if (t < t_lo * (1 - 1e-9) || t > t_hi * (1 + 1e-9)) continue;
      const double scale = std::sqrt(t) / std::log(1.0 + 1.0 / t);
      for (std::size_t y = 0; y < sol.size(); ++y) {
        const double pm = sol.value(sm, i, y), pp = sol.value(sp, i, y);
        if (!(pm > 0.0) || !(pp > 0.0)) {
          ++fit.underflow;
          continue;
        }
        const double g = std::abs(std::log(pp) - std::log(pm)) / (2 * dx);
        const double rho = std::abs(xk - sol.x[y]);
        const double c = (g - (1 + eps) * rho / (2 * t)) * scale;
        ++fit.evaluated;
        if (c > fit.c) fit.c = c, fit.worst_t = t, fit.worst_x = xk, fit.worst_y = sol.x[y];
      }
    }
  }
  return fit;
}

CheckReport grad_log_pD_check(const GridSolution& coarse, const GridSolution& fine,
                              const std::vector<double>& k_set, double eps, double stability) {
  if (eps < 0.0) throw std::invalid_argument("grad_log_pD_check: eps must be >= 0");
  CheckReport r;
  r.name = "prop25";
  const GradLogFit fc = fit_grad_log_constant(coarse, k_set, eps);
  const GradLogFit ff = fit_grad_log_constant(fine, k_set, eps);
  r.trials = fc.evaluated + ff.evaluated;
  r.fitted_constants["C_coarse"] = fc.c;
  r.fitted_constants["C_fine"] = ff.c;
  r.fitted_constants["n_x_coarse"] = coarse.n_x;
  r.fitted_constants["n_x_fine"] = fine.n_x;
  r.fitted_constants["worst_t"] = ff.worst_t;
  r.fitted_constants["worst_x"] = ff.worst_x;
  r.fitted_constants["worst_y"] = ff.worst_y;
  r.fitted_constants["eps"] = eps;
  r.columns = {"n_x", "C", "worst_t", "worst_x", "worst_y", "evaluated", "underflow"};
  for (const auto* f : {&fc, &ff}) {
    const auto& g = f == &fc ? coarse : fine;
    r.rows.push_back({static_cast<double>(g.n_x), f->c, f->worst_t, f->worst_x, f->worst_y,
                      static_cast<double>(f->evaluated), static_cast<double>(f->underflow)});
  }
  if (fc.underflow + ff.underflow) r.note("kernel underflow excluded " + std::to_string(fc.underflow + ff.underflow) + " pairs");
  const bool finite = std::isfinite(fc.c) && std::isfinite(ff.c);
  const double rel = std::abs(fc.c - ff.c) / std::max(std::abs(ff.c), 1e-300);
  r.fitted_constants["refinement_change"] = rel;
  const bool ok = finite && rel <= stability;
  if (!ok) ++r.violations;
  r.pass = ok;
  return r;
}

std::vector<FreeSpaceRow> free_space_log_gradient(double half_width, int n_x, const std::vector<double>& times,
                                                  const std::vector<double>& rhos) {
  std::vector<FreeSpaceRow> rows;
  const double a = -half_width, b = half_width;
  const auto sources = gradient_sources(a, b, n_x, {0.0});
  for (double t : times) {
    const GridSolution sol = solve_heat_dirichlet(a, b, Potential::zero(), n_x, 1, t, sources);
    const int c = sol.node_of(0.0);
    const std::size_t sm = sol.source_slot(c - 1), sp = sol.source_slot(c + 1);
    for (double rho : rhos) {
      const int y = sol.node_of(rho);
      const double g = std::abs(std::log(sol.value(sp, 1, y)) - std::log(sol.value(sm, 1, y))) / (2 * sol.dx());
      const double r = std::abs(sol.x[y] - sol.x[c]);
      const double exact = r / (2 * t);
      rows.push_back({t, r, g, exact, exact > 0 ? std::abs(g - exact) / exact : std::abs(g)});
    }
  }
  return rows;
}

}  // namespace difflab
