#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "difflab/dirichlet.hpp"
#include "difflab/pde_oracle.hpp"

using namespace difflab;

namespace {

constexpr double kPi = std::numbers::pi;

// Dirichlet heat kernel of d^2/dx^2 on (0, pi): (2/pi) sum e^{-n^2 t} sin(nx) sin(ny).
double series_kernel(double t, double x, double y) {
  double s = 0.0;
  for (int n = 1; n < 2000; ++n) s += std::exp(-double(n) * n * t) * std::sin(n * x) * std::sin(n * y);
  return 2.0 / kPi * s;
}

}  // namespace

TEST(HeatOracle, MatchesEigenfunctionSeriesAtCentre) {
  const int n_x = 512;
  const auto sol = solve_heat_dirichlet(0.0, kPi, Potential::zero(), n_x, 50, 0.5, {n_x / 2 - 1});
  const std::size_t c = static_cast<std::size_t>(n_x / 2 - 1);
  EXPECT_NEAR(sol.x[c], kPi / 2, 1e-14);
  EXPECT_NEAR(sol.value(0, 50, c), series_kernel(0.5, kPi / 2, kPi / 2), 1e-4);
  // Off-centre and at an earlier time as well.
  EXPECT_NEAR(sol.value(0, 10, c + 100), series_kernel(0.1, kPi / 2, sol.x[c + 100]), 1e-4);
}

TEST(HeatOracle, MassDecaysAtFirstEigenvalue) {
  const auto sol = solve_heat_dirichlet(0.0, kPi, Potential::zero(), 256, 100, 5.0, {60});
  const auto m = sol.mass(0);
  const double rate = std::log(m[80] / m[100]) / (sol.time(100) - sol.time(80));
  EXPECT_NEAR(rate, 1.0, 1e-4);
}

TEST(HeatOracle, MuSymmetryAndPositivity) {
  const Potential v = Potential::linear(Vec{0.7});
  const int n_x = 128;
  const auto p = heat_kernel_matrix(-1.0, 2.0, v, n_x, 0.05);
  const std::size_t n = n_x - 1;
  double worst = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ASSERT_GE(p[i * n + j], 0.0);
      worst = std::max(worst, std::abs(p[i * n + j] - p[j * n + i]));
      peak = std::max(peak, p[i * n + j]);
    }
  EXPECT_LT(worst / peak, 1e-6);
}

TEST(HeatOracle, TableAgreesWithMatrixForm) {
  const Potential v = Potential::quadratic(0.5);
  const auto sol = solve_heat_dirichlet(-2.0, 2.0, v, 128, 4, 0.2, {40});
  const auto p = heat_kernel_matrix(-2.0, 2.0, v, 128, 0.2);
  for (std::size_t j = 0; j < sol.size(); j += 7)
    EXPECT_NEAR(sol.value(0, 4, j), p[40 * sol.size() + j], 1e-10 * (1 + p[40 * sol.size() + j]));
}

TEST(HeatOracle, RejectsCoarseGrid) {
  EXPECT_THROW(solve_heat_dirichlet(0.0, 1.0, Potential::zero(), 32, 10, 1.0, {5}), std::invalid_argument);
}

TEST(HeatOracle, CsvDump) {
  const auto sol = solve_heat_dirichlet(0.0, 1.0, Potential::zero(), 64, 2, 0.01, {31});
  std::ostringstream os;
  sol.write_csv(os, 0);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("t,x,value\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), 1 + 3 * sol.size());
}

TEST(PoissonKernel, LinearHarmonicFunctions) {
  const auto pk = poisson_kernel(0.0, 1.0, Potential::zero(), 100);
  for (std::size_t j = 0; j < pk.x.size(); ++j) {
    EXPECT_NEAR(pk.k_b[j] * pk.nu_b, pk.x[j], 1e-12);
    EXPECT_NEAR(pk.k_a[j] * pk.nu_a, 1 - pk.x[j], 1e-12);
  }
}

TEST(PoissonKernel, PositiveAndPartitionOfUnityWithPotential) {
  const auto pk = poisson_kernel(-1.0, 1.5, Potential::linear(Vec{2.0}), 200);
  for (std::size_t j = 0; j < pk.x.size(); ++j) {
    EXPECT_GE(pk.k_a[j], 0.0);
    EXPECT_GE(pk.k_b[j], 0.0);
    EXPECT_NEAR(pk.harmonic_extension(1.0, 1.0, j), 1.0, 1e-12);
  }
  // Scale function oracle: P(exit at b | x) = int_a^x e^{-V} / int_a^b e^{-V}, V = 2x.
  const auto s = [](double x) { return (std::exp(2.0) - std::exp(-2 * x)) / 2; };
  for (std::size_t j = 10; j < pk.x.size(); j += 40)
    EXPECT_NEAR(pk.k_b[j] * pk.nu_b, s(pk.x[j]) / s(1.5), 1e-4);
}

TEST(TimeDerivative, FourthOrderOnPolynomials) {
  std::vector<double> u;
  const double h = 0.1;
  for (int i = 0; i < 12; ++i) {
    const double t = i * h;
    u.push_back(t * t * t * t - 2 * t * t + t);
  }
  const auto d = time_derivative(u, h);
  for (int i = 0; i < 12; ++i) {
    const double t = i * h;
    EXPECT_NEAR(d[i], 4 * t * t * t - 4 * t + 1, 1e-11);
  }
}

TEST(ExitIdentities, IdentitiesOnSymmetricInterval) {
  const int n_x = 512;
  const auto sol = solve_heat_dirichlet(0.0, kPi, Potential::zero(), n_x, 4000, 10.0, {n_x / 2 - 1});
  const auto pk = poisson_kernel(0.0, kPi, Potential::zero(), n_x);
  const auto r = lemma21_residual(sol, pk, 0, {0.001, 0.05, 0.25, 0.5, 1.0, 2.0});
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.fitted_constants.at("identity_residual_max"), 1e-3);
  EXPECT_NEAR(r.fitted_constants.at("ell_integral"), 1.0, 1e-3);
  EXPECT_LT(r.fitted_constants.at("mass_balance_max"), 1e-3);
  EXPECT_GE(r.fitted_constants.at("h_min"), -1e-8);
  EXPECT_EQ(r.trials, 5u);  // t = 0.001 is below 4 dt
}

TEST(ExitIdentities, OracleExitLawMatchesMonteCarlo) {
  const int n_x = 256;
  const auto sol = solve_heat_dirichlet(0.0, kPi, Potential::linear(Vec{0.5}), n_x, 1000, 2.0, {80});
  const auto pk = poisson_kernel(0.0, kPi, Potential::linear(Vec{0.5}), n_x);
  const auto m = ManifoldModel::euclidean(1, Potential::linear(Vec{0.5}));
  SimConfig c;
  c.n_paths = 50000;
  c.dt = 1e-3;
  c.t_end = 2.0;
  c.seed = 11;
  const auto law = hitting_law(m, Vec{sol.x[80]}, DomainSpec::interval(0.0, kPi), c);
  std::vector<double> taus;
  for (const auto& s : law.samples) taus.push_back(s.tau);
  const auto r = lemma21_residual(sol, pk, 0, {0.1, 0.5, 1.0}, taus, 2.0);
  EXPECT_GT(r.fitted_constants.at("ks_p"), 1e-3);
}

TEST(ExitIdentities, OracleSemigroupMatchesSurvivorAverages) {
  const int n_x = 256;
  const double t = 0.4;
  const auto sol = solve_heat_dirichlet(0.0, kPi, Potential::zero(), n_x, 8, t, {90});
  const auto m = ManifoldModel::euclidean(1);
  SimConfig c;
  c.n_paths = 100000;
  c.dt = 1e-3;
  c.t_end = t;
  c.seed = 12;
  const auto ens = sample_paths(m, Vec{sol.x[90]}, c, DomainSpec::interval(0.0, kPi));
  const std::vector<std::function<double(double)>> fs = {
      [](double x) { return std::exp(-x); }, [](double x) { return 1.0 + std::sin(3 * x); },
      [](double x) { return x * x; }};
  for (const auto& f : fs) {
    const auto est = mc_functional(ens, [&](const Point& p) { return f(p[0]); }, Functional::MeanF, Restrict::Survivors);
    EXPECT_NEAR(sol.apply(0, 8, f), est.mean, 3 * est.std_error + 1e-4);
  }
}

TEST(DirichletLogGradient, RefinementStability) {
  const std::vector<double> k = {kPi / 4, kPi / 2, 3 * kPi / 4};
  const auto coarse = solve_heat_dirichlet(0.0, kPi, Potential::zero(), 256, 100, 1.0, gradient_sources(0.0, kPi, 256, k));
  const auto fine = solve_heat_dirichlet(0.0, kPi, Potential::zero(), 512, 100, 1.0, gradient_sources(0.0, kPi, 512, k));
  const auto r = grad_log_pD_check(coarse, fine, k, 0.0);
  EXPECT_TRUE(r.pass) << r.fitted_constants.at("C_coarse") << " " << r.fitted_constants.at("C_fine");
  EXPECT_TRUE(std::isfinite(r.fitted_constants.at("C_fine")));
}

TEST(DirichletLogGradient, DiagonalReducesToLogTerm) {
  // y = x: the rho term vanishes, so the required constant at y = x is
  // |d_x log p| sqrt(t) / log(1 + 1/t), which is tiny at the symmetric centre.
  const auto sol = solve_heat_dirichlet(0.0, kPi, Potential::zero(), 256, 10, 0.1,
                                        gradient_sources(0.0, kPi, 256, {kPi / 2}));
  const auto fit = fit_grad_log_constant(sol, {kPi / 2}, 0.0, 0.01, 0.1);
  EXPECT_GT(fit.evaluated, 0u);
  EXPECT_TRUE(std::isfinite(fit.c));
}

TEST(DirichletLogGradient, FreeSpaceSharpness) {
  const auto rows = free_space_log_gradient(3.0, 512, {0.02, 0.05, 0.1}, {0.25, 0.5, 1.0});
  for (const auto& r : rows) EXPECT_LT(r.rel_error, 0.02) << r.t << " " << r.rho;
}
