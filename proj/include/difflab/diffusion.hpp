#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "difflab/domain.hpp"
#include "difflab/geometry.hpp"
#include "difflab/parallel.hpp"
#include "difflab/rng.hpp"

namespace difflab {

struct SimConfig {
  double dt = 1e-3;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  double t_end = 1.0;
  bool substep_near_boundary = true;
  std::uint64_t stream = 0;  // distinguishes independent ensembles under one seed
  int workers = 0;           // 0: OpenMP default

  void validate() const;
};

enum PathFlag : std::uint8_t {
  kPathOk = 0,
  kSubstepFloor = 1,  // boundary substepping hit its minimum step size
};

struct ExitRecord {
  double time = 0.0;  // tau in (0, t_end]
  Point point;        // X_tau on the boundary
};

struct PathEnsemble {
  std::vector<Point> terminal_points;  // X_t; frozen at the exit point for dead paths
  std::vector<std::uint8_t> alive;
  std::optional<std::vector<ExitRecord>> exits;  // present when a domain was given
  std::vector<double> weights;
  std::vector<std::uint8_t> flags;
  double t_end = 0.0;

  std::size_t size() const noexcept { return terminal_points.size(); }
  std::size_t flagged() const noexcept;
  std::size_t survivors() const noexcept;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;         // paths in the denominator; 0 flags an empty selection
  std::size_t selected = 0;  // paths that passed the restriction
  bool flagged = false;
};

// One geodesic Euler-Maruyama step exp_x(sqrt(2 dt) noise + Z(x) dt).
Point step(const ManifoldModel& m, const Point& x, double dt, const Tangent& noise);

// Standard normal tangent vector at x in the model's orthonormal frame,
// addressed by (path, step, slot).
Tangent draw_noise(const ManifoldModel& m, const Point& x, const CounterRng& rng, std::uint64_t path,
                   std::uint32_t step, std::uint32_t slot);

struct Crossing {
  bool hit = false;
  double frac = 0.0;  // exit time as a fraction of the step
  Point point;        // exit point on the boundary
};

// Exit test for one step x1 -> x2 of length h, given the bridge uniform u.
// Endpoint outside counts as a hit at the interpolated crossing; otherwise a
// Brownian-bridge crossing is accepted with its probability (exact on
// intervals, half-space approximation on balls and caps).
Crossing step_crossing(const ManifoldModel& m, const DomainSpec& dom, const Point& x1, const Point& x2,
                       double h, double u);

// Outcome of one simulated path.
struct PathResult {
  Point x;
  bool alive = true;
  double exit_time = 0.0;
  Point exit_point;
  std::uint8_t flags = kPathOk;
};

// Advances one path from x0 over `duration`. Draws are keyed by
// (rng seed/stream, path_id, step, slot), so the result depends on nothing else.
PathResult simulate_path(const ManifoldModel& m, const Point& x0, double duration, double dt,
                         const std::optional<DomainSpec>& domain, bool substep,
                         const CounterRng& rng, std::uint64_t path_id);

PathEnsemble sample_paths(const ManifoldModel& m, const Point& x0, const SimConfig& cfg,
                          const std::optional<DomainSpec>& domain = std::nullopt,
                          Execution exec = Execution::Parallel);

// Serial reference of sample_paths.
inline PathEnsemble sample_paths_serial(const ManifoldModel& m, const Point& x0, const SimConfig& cfg,
                                        const std::optional<DomainSpec>& domain = std::nullopt) {
  return sample_paths(m, x0, cfg, domain, Execution::Serial);
}

// Restarts: path i starts at starts[i] and runs for durations[i]
// (cfg.t_end and cfg.n_paths are ignored).
PathEnsemble sample_paths_from(const ManifoldModel& m, std::span<const Point> starts,
                               std::span<const double> durations, const SimConfig& cfg,
                               const std::optional<DomainSpec>& domain = std::nullopt,
                               Execution exec = Execution::Parallel);

enum class Functional { MeanF, MeanFLogF };
enum class Restrict { All, Survivors, Exited };

using TestFunction = std::function<double(const Point&)>;

// Monte Carlo average of weight * g(f(X_t)) * indicator over all paths, with
// g(f) = f or f log f (0 log 0 = 0, f floored at 1e-300).
McEstimate mc_functional(const PathEnsemble& ens, const TestFunction& f, Functional mode,
                         Restrict restrict, int workers = 0);

}  // namespace difflab
