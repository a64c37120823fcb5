#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "difflab/dirichlet.hpp"
#include "difflab/stats.hpp"

using namespace difflab;

namespace {

constexpr double kPi = std::numbers::pi;

SimConfig cfg(std::size_t n, double dt, double t_end, std::uint64_t seed = 1) {
  SimConfig c;
  c.n_paths = n;
  c.dt = dt;
  c.t_end = t_end;
  c.seed = seed;
  return c;
}

double binom_se(double p, std::size_t n) { return std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST(HittingLaw, SymmetricExitSides) {
  const auto m = ManifoldModel::euclidean(1);
  const auto d = DomainSpec::interval(0.0, kPi);
  const auto law = hitting_law(m, Vec{kPi / 2}, d, cfg(40000, 0.005, 20.0, 3));
  EXPECT_FALSE(law.low_statistics);
  EXPECT_EQ(law.samples.size(), law.n_paths);
  const double p0 = law.exit_fraction_at(Vec{0.0});
  EXPECT_NEAR(p0, 0.5, 3 * binom_se(0.5, law.n_paths));
}

TEST(HittingLaw, HarmonicExitProbability) {
  const auto m = ManifoldModel::euclidean(1);
  const auto d = DomainSpec::interval(0.0, kPi);
  const auto law = hitting_law(m, Vec{kPi / 4}, d, cfg(40000, 0.005, 20.0, 4));
  EXPECT_NEAR(law.exit_fraction_at(Vec{0.0}), 0.75, 3 * binom_se(0.75, law.n_paths) + 2e-3);
}

TEST(HittingLaw, HarmonicityAtFivePoints) {
  const auto m = ManifoldModel::euclidean(1);
  const auto d = DomainSpec::interval(-1.0, 2.0);
  int k = 0;
  for (double x : {-0.5, 0.0, 0.5, 1.0, 1.5}) {
    const auto law = hitting_law(m, Vec{x}, d, cfg(20000, 0.002, 15.0, 10 + k++));
    const double want = (x + 1.0) / 3.0;
    EXPECT_NEAR(law.exit_fraction_at(Vec{2.0}), want, 3 * binom_se(want, law.n_paths) + 2e-3) << x;
  }
}

TEST(HittingLaw, MeanExitTime) {
  // E tau = x (pi - x) / 2 for diffusivity 2.
  const auto m = ManifoldModel::euclidean(1);
  const auto law = hitting_law(m, Vec{kPi / 2}, DomainSpec::interval(0.0, kPi), cfg(40000, 0.002, 25.0, 5));
  std::vector<double> taus;
  for (const auto& s : law.samples) taus.push_back(s.tau);
  const auto ms = mean_se(taus);
  EXPECT_NEAR(ms.mean, kPi * kPi / 8, 3 * ms.std_error + 2e-3);
}

TEST(HittingLaw, MassMatchesExitProbability) {
  const auto m = ManifoldModel::euclidean(1);
  const auto d = DomainSpec::interval(0.0, kPi);
  const auto law = hitting_law(m, Vec{1.0}, d, cfg(20000, 0.01, 1.0, 6));
  const auto ens = sample_paths(m, Vec{1.0}, cfg(20000, 0.01, 1.0, 6), d);
  EXPECT_LE(law.exit_probability(), 1.0);
  EXPECT_DOUBLE_EQ(law.exit_probability(), 1.0 - static_cast<double>(ens.survivors()) / ens.size());
  // Integral of the KDE density over t and both boundary atoms is close to the mass.
  double integral = 0.0;
  const double dt = 0.005;
  for (double t = -0.5; t < 1.6; t += dt)
    integral += dt * (law.density(m, d, t, Vec{0.0}) + law.density(m, d, t, Vec{kPi}));
  EXPECT_NEAR(integral, law.exit_probability(), 1e-3);
  EXPECT_GT(law.kde_bandwidth_t, 0.0);
  EXPECT_GT(law.kde_bandwidth_z, 0.0);
}

TEST(HittingLaw, LowStatisticsFlag) {
  const auto m = ManifoldModel::euclidean(1);
  const auto law = hitting_law(m, Vec{0.0}, DomainSpec::interval(-5.0, 5.0), cfg(500, 0.01, 0.2, 1));
  EXPECT_TRUE(law.low_statistics);
}

TEST(HittingLaw, BallBoundaryDensityIsPositive) {
  const auto m = ManifoldModel::euclidean(2);
  const auto d = DomainSpec::ball(Vec{0, 0}, 1.0);
  const auto law = hitting_law(m, Vec{0, 0}, d, cfg(5000, 0.01, 2.0, 7));
  EXPECT_GT(law.kde_bandwidth_z, 0.0);
  // Rotational symmetry: density at two boundary points agrees roughly.
  const double a = law.density(m, d, 0.2, Vec{1, 0});
  const double b = law.density(m, d, 0.2, Vec{0, -1});
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a / b, 1.0, 0.3);
}

TEST(HittingTail, ReflectionPrincipleAtModerateTime) {
  // Start at the midpoint of (0, 2): rho = 1, t = 0.05. Each side contributes
  // 2 Phi(-1 / sqrt(2t)); the two-sided correction is O(e^{-9/4t}).
  const auto m = ManifoldModel::euclidean(1);
  const auto d = DomainSpec::interval(0.0, 2.0);
  const auto fit = hitting_tail(m, d, Vec{1.0}, {0.05}, cfg(400000, 0.005, 0.05, 8));
  const double want = 4.0 * normal_cdf(-1.0 / std::sqrt(0.1));
  EXPECT_NEAR(fit.p[0], want, 3 * fit.se[0]);
  EXPECT_LT(fit.p[0], 1.0 * std::exp(-1.0 / (16 * 0.05)));
}

TEST(HittingTail, SmallTimeRateIsSharperThanPaperRate) {
  const auto m = ManifoldModel::euclidean(1);
  const auto d = DomainSpec::interval(0.0, 2.0);
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(0.01 * i);
  const auto fit = hitting_tail(m, d, Vec{0.5}, grid, cfg(400000, 0.0025, 0.1, 9));
  ASSERT_GE(fit.points_used, 3u);
  EXPECT_LE(fit.rate, -0.25 / 16);
  EXPECT_LE(fit.rate, -0.25 / 8);
  EXPECT_NEAR(fit.rate, -0.25 / 4, 0.15 * 0.25 / 4 + 3 * fit.rate_se);
}

TEST(HittingTail, CheckPassesNearBoundary) {
  const auto m = ManifoldModel::euclidean(1);
  const auto d = DomainSpec::interval(0.0, 2.0);
  const auto r = hitting_tail_check(m, d, Vec{0.01}, {0.01, 0.05, 0.1, 0.5}, cfg(20000, 0.0025, 0.5, 2));
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.fitted_constants.at("C"), 1.01);
}

TEST(Decomposition, ConstantFunctionIsExact) {
  const auto m = ManifoldModel::euclidean(2);
  const auto r = decomposition_residual(m, DomainSpec::ball(Vec{0, 0}, 0.5), Vec{0, 0}, 0.3,
                                        [](const Point&) { return 1.0; }, cfg(2000, 0.01, 0.3, 3));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.fitted_constants.at("rhs"), 1.0, 1e-12);
}

TEST(Decomposition, ExponentialOnInterval) {
  const auto m = ManifoldModel::euclidean(1);
  DecompositionOptions opt;
  opt.continuation_dt = 0.25;
  const auto f = [](const Point& x) { return std::exp(x[0]); };
  const auto r = decomposition_residual(m, DomainSpec::interval(-1.0, 1.0), Vec{0.0}, 0.25, f,
                                        cfg(100000, 1e-3, 0.25, 4), opt);
  EXPECT_TRUE(r.pass) << r.fitted_constants.at("residual") << " vs " << r.fitted_constants.at("sigma");
  EXPECT_NEAR(r.fitted_constants.at("lhs"), std::exp(0.25), 3 * r.fitted_constants.at("lhs_se"));
  EXPECT_GT(r.fitted_constants.at("continuation_term"), 0.0);
}

TEST(Decomposition, TimeBelowStepIsDegenerate) {
  const auto m = ManifoldModel::euclidean(1);
  const auto f = [](const Point& x) { return 2.0 + std::sin(x[0]); };
  const auto r = decomposition_residual(m, DomainSpec::interval(-1.0, 1.0), Vec{0.0}, 1e-4, f,
                                        cfg(20000, 1e-2, 1.0, 5));
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.fitted_constants.at("lhs"), 2.0, 0.05);
}

TEST(Decomposition, RejectsIncompleteModel) {
  const auto m = ManifoldModel::interval(0.0, 1.0);
  EXPECT_THROW(decomposition_residual(m, DomainSpec::interval(0.2, 0.8), Vec{0.5}, 0.1,
                                      [](const Point&) { return 1.0; }, cfg(10, 0.01, 0.1)),
               std::invalid_argument);
}

TEST(StrongMarkov, RestartMatchesDirectExitLaw) {
  const auto m = ManifoldModel::euclidean(1);
  const auto r = strong_markov_check(m, DomainSpec::interval(0.0, kPi), Vec{1.0}, 0.3, cfg(100000, 0.005, 3.0, 6));
  EXPECT_TRUE(r.pass) << r.fitted_constants.at("ks_p");
}

TEST(StrongMarkov, BallDomain) {
  const auto m = ManifoldModel::hyperbolic(2);
  const auto r = strong_markov_check(m, DomainSpec::ball(m.origin(), 1.0), m.origin(), 0.1, cfg(20000, 0.01, 1.0, 7));
  EXPECT_TRUE(r.pass) << r.fitted_constants.at("ks_p");
}
