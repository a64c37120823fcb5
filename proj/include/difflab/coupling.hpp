#pragma once

#include <optional>
#include <vector>

#include "difflab/diffusion.hpp"
#include "difflab/stats.hpp"

namespace difflab {

struct CouplingConfig {
  double h = 1e-3;      // initial separation
  double c = 0.5;       // coupling by time c t
  double t = 1.0;       // horizon
  double kappa = 0.0;   // Ric - grad Z >= -kappa
  double delta = 1.0;   // entropy weight (carried for the harness)

  void validate(const ManifoldModel& m) const;
  // |xi| = h / (c t) + kappa h before coupling.
  double drift_speed() const noexcept { return h / (c * t) + kappa * h; }
};

struct CoupledPair {
  Point x;
  Point xh;
  double rho = 0.0;
  double girsanov_log = 0.0;  // log R^h
  double quadvar = 0.0;       // [M^h]
  std::optional<double> coupled_at;
  // Exit bookkeeping when a domain is given.
  std::optional<double> tau;
  std::optional<double> tau_h;
  // Pathwise diagnostics.
  double max_rho = 0.0;
  std::uint32_t envelope_records = 0;
  std::uint32_t envelope_violations = 0;  // rho_s > h (ct - s) / ct
  double max_xi_sq = 0.0;

  bool coupled() const noexcept { return coupled_at.has_value(); }
};

// Thrown when a pair reaches the injectivity guard (0.9 pi r on spheres).
struct CutLocusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One step of the coupling: X by step(), X^h with the transported noise, its
// own drift and xi = (h / ct + kappa h) n(X^h, X). Updates the Girsanov weight
// log R += -<xi, dW^h> / sqrt 2 - |xi|^2 dt / 4, where dW^h = sqrt(dt) P noise
// (the generator L carries sqrt 2 noise). Merges when the drift can close the
// remaining gap within one step. `s` is the time at the start of the step.
void coupled_step(const ManifoldModel& m, CoupledPair& pair, const CouplingConfig& cfg, double s, double dt,
                  const Tangent& noise);

struct CouplingRun {
  double dt = 1e-3;
  std::size_t n_pairs = 1000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int workers = 0;
  double horizon = 0.0;  // 0: cfg.t
};

struct CoupledEnsemble {
  std::vector<CoupledPair> pairs;
  double horizon = 0.0;
  double h = 0.0;
  double ct = 0.0;
};

// x0h = exp_x0(h v) with v a unit tangent at x0.
CoupledEnsemble simulate_coupled(const ManifoldModel& m, const Point& x0, const Tangent& v,
                                 const CouplingConfig& cfg, const CouplingRun& run,
                                 const std::optional<DomainSpec>& domain = std::nullopt,
                                 Execution exec = Execution::Parallel);

struct GradientEstimate {
  McEstimate derivative;  // (P f(phi(h)) - P f(x0)) / h
  McEstimate value;       // P_t f(x0) (survivors when a domain is given)
  McEstimate f_log_f;     // P_t (f log f)(x0), same restriction
  bool variance_dominated = false;
};

// Directional derivative of P_t f (or P_t^D f with a domain) at x0 along v by
// E[f(X^h_t) R 1{t < tau^h}] - E[f(X_t) 1{t < tau}], divided by h. cfg.h <= 0
// selects the default h = 1e-3 sqrt(t).
GradientEstimate gradient_via_coupling(const ManifoldModel& m, const Point& x0, const Tangent& v,
                                       const TestFunction& f, CouplingConfig cfg, const CouplingRun& run,
                                       const std::optional<DomainSpec>& domain = std::nullopt);

struct CouplingStats {
  double coupled_fraction = 0.0;       // pairs with coupled_at <= c t
  double mean_r = 0.0, mean_r_se = 0.0;
  double entropy = 0.0, entropy_se = 0.0;  // E[R log R]
  double entropy_bound = 0.0;              // (1/2) h^2 (kappa + 1/ct)^2 ct
  double max_rho_over_h = 0.0;
  double envelope_violation_rate = 0.0;
  double max_xi_sq = 0.0;
  double xi_sq_bound = 0.0;
};

CouplingStats coupling_stats(const CoupledEnsemble& ens, const CouplingConfig& cfg);

// Two-sample KS between stat(X^h) weighted by R^h (alive pairs only) and an
// unweighted reference sample.
KsResult reweighted_ks(const CoupledEnsemble& ens, const std::function<double(const Point&)>& stat,
                       std::span<const double> reference);

}  // namespace difflab
