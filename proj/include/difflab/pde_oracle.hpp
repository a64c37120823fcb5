#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "difflab/geometry.hpp"
#include "difflab/report.hpp"

namespace difflab {

// Dirichlet heat kernel on (a, b) for L u = u'' + V' u' = e^{-V} (e^V u')',
// tabulated for a set of source nodes. The grid has n_x cells of width
// dx = (b - a) / n_x; the unknowns are the n_x - 1 interior nodes
// x_j = a + j dx, j = 1 .. n_x - 1, stored at index j - 1.
struct GridSolution {
  double a = 0.0;
  double b = 1.0;
  int n_x = 0;
  int n_t = 0;
  double t_max = 0.0;
  Potential potential;
  std::vector<double> x;       // interior nodes
  std::vector<double> weight;  // e^{V(x_j)}
  std::vector<int> sources;    // source node indices into x
  // values[s][i * x.size() + j] = p_{t_i}(x_{sources[s]}, x_j) w.r.t. mu = e^V dx.
  std::vector<std::vector<double>> values;

  double dx() const { return (b - a) / n_x; }
  double dt() const { return t_max / n_t; }
  double time(int i) const { return i * dt(); }
  std::size_t size() const { return x.size(); }
  double value(std::size_t s, int ti, std::size_t j) const { return values[s][ti * x.size() + j]; }
  // Index into `sources` of the given node; throws when it was not tabulated.
  std::size_t source_slot(int node) const;
  // Nearest interior node to a position.
  int node_of(double pos) const;
  // mu-mass int p_t(x_s, y) mu(dy) at every stored time.
  std::vector<double> mass(std::size_t s) const;
  // P_t^D f(x_s) at time index ti.
  double apply(std::size_t s, int ti, const std::function<double(double)>& f) const;
  // CSV rows (t, x, value) for one source.
  void write_csv(std::ostream& os, std::size_t s) const;
};

// Exact-in-time propagation by the matrix exponential of the mu-symmetric
// three-point operator. The exponential is formed from nonnegative terms only,
// so even very small kernel values keep their relative accuracy.
GridSolution solve_heat_dirichlet(double a, double b, const Potential& v, int n_x, int n_t, double t_max,
                                  std::vector<int> source_nodes);

// Full kernel matrix p_t(x_i, x_j) (row-major, interior nodes) at one time.
std::vector<double> heat_kernel_matrix(double a, double b, const Potential& v, int n_x, double t);

// Poisson kernel with respect to nu({z}) = e^{V(z)} on the two-point boundary.
struct PoissonKernelTable {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> x;
  std::vector<double> k_a;  // K(a, x_j)
  std::vector<double> k_b;  // K(b, x_j)
  double nu_a = 1.0;
  double nu_b = 1.0;

  // sum_z K(z, x_j) f(z) nu({z})
  double harmonic_extension(double f_a, double f_b, std::size_t j) const {
    return k_a[j] * f_a * nu_a + k_b[j] * f_b * nu_b;
  }
};

PoissonKernelTable poisson_kernel(double a, double b, const Potential& v, int n_x);

// Fourth-order finite differences on a uniform grid (one-sided at the ends).
std::vector<double> time_derivative(std::span<const double> u, double dt);

// Exit identities for source sol.sources[s]: the integrated identity
// K(z,x) = int p_t K mu + int_0^t h_x(s,z) ds on t_grid, int_0^inf l_x = 1,
// the mass balance 1 - int p_t mu = int_0^t l_x, positivity of h, and, when
// Monte Carlo exit times are supplied (all <= mc_t_end), a KS comparison with
// the oracle law of tau conditioned on tau <= mc_t_end.
CheckReport lemma21_residual(const GridSolution& sol, const PoissonKernelTable& pk, std::size_t s,
                             const std::vector<double>& t_grid, std::span<const double> mc_taus = {},
                             double mc_t_end = 0.0);

// Exit-time CDF P(tau <= t) from the grid mass, linear in t between stored times.
double oracle_exit_cdf(const GridSolution& sol, std::size_t s, double t);

// Sources needed by grad_log_pD_check: each node of K_set and its neighbours.
std::vector<int> gradient_sources(const GridSolution& layout, const std::vector<double>& k_set);
std::vector<int> gradient_sources(double a, double b, int n_x, const std::vector<double>& k_set);

// Minimal C(eps) with |d_x log p_t(x,y)| <= C log(1 + 1/t) / sqrt(t) + (1 + eps) rho / 2t
// over x in K_set, interior y and stored t in [t_lo, t_hi].
struct GradLogFit {
  double c = 0.0;
  double worst_t = 0.0;
  double worst_x = 0.0;
  double worst_y = 0.0;
  std::size_t evaluated = 0;
  std::size_t underflow = 0;  // pairs skipped because p underflowed to 0
};

GradLogFit fit_grad_log_constant(const GridSolution& sol, const std::vector<double>& k_set, double eps,
                                 double t_lo = 0.01, double t_hi = 1.0);

// Refinement study between two grids; passes when C is finite and both fits
// agree within `stability` (relative to the finer one).
CheckReport grad_log_pD_check(const GridSolution& coarse, const GridSolution& fine,
                              const std::vector<double>& k_set, double eps, double stability = 0.10);

// Whole-line sharpness: on a wide interval the grid log-gradient at distance rho
// from the central source, relative to rho / 2t, for each (t, rho).
struct FreeSpaceRow {
  double t, rho, grid, exact, rel_error;
};
std::vector<FreeSpaceRow> free_space_log_gradient(double half_width, int n_x, const std::vector<double>& times,
                                                  const std::vector<double>& rhos);

}  // namespace difflab
