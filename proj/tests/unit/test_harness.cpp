#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "difflab/harness.hpp"

using namespace difflab;

namespace {

constexpr double kPi = std::numbers::pi;

CheckSpec spec_for(CheckName n, ManifoldModel m = ManifoldModel::euclidean(1)) {
  CheckSpec s;
  s.name = n;
  s.model = std::move(m);
  s.seed = 2024;
  return s;
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  return g;
}

// E[g(X)] for X ~ N(mean, var) by the trapezoid rule on +-12 sd.
template <class G>
double gauss_expect(double mean, double var, G g) {
  const double sd = std::sqrt(var);
  const int n = 20000;
  const double h = 24.0 * sd / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = mean - 12.0 * sd + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    s += w * g(x) * std::exp(-(x - mean) * (x - mean) / (2 * var));
  }
  return s * h / std::sqrt(2 * kPi * var);
}

}  // namespace

TEST(CheckSpec, GuardsAndNames) {
  auto s = spec_for(CheckName::Harnack);
  s.ranges["alpha"] = {0.5, 2.0};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = spec_for(CheckName::Thm11);
  s.ranges["t"] = {0.1, 2.0};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.name = CheckName::Prop31;
  EXPECT_NO_THROW(s.validate());
  s = spec_for(CheckName::KernelBound);
  s.ranges["delta"] = {2.0, 4.0};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = spec_for(CheckName::Lemma25);
  s.trial_count = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_EQ(check_from_string("appendix_a1"), CheckName::AppendixA1);
  EXPECT_EQ(to_string(CheckName::Lemma22_23), "lemma22_23");
  EXPECT_THROW(check_from_string("thm99"), std::invalid_argument);
}

TEST(TestFamily, PositiveAndBounded) {
  const auto m = ManifoldModel::sphere(2);
  TestFamilyMember f;
  f.kind = TestFamilyMember::Kind::ClippedExp;
  f.lambda = 100.0;
  f.clip = 5.0;
  EXPECT_EQ(f(m, m.origin()), 5.0);
  f.lambda = -100.0;
  EXPECT_EQ(f(m, m.origin()), 1e-6);
  f.kind = TestFamilyMember::Kind::Bump;
  f.center = m.origin();
  EXPECT_DOUBLE_EQ(f(m, m.origin()), 1.0);
  f.kind = TestFamilyMember::Kind::SmoothIndicator;
  EXPECT_GT(f(m, m.origin()), 0.5);
}

TEST(EntropyDuality, RandomInstancesAndEquality) {
  auto s = spec_for(CheckName::Lemma25);
  s.trial_count = 20000;
  const auto r = run_check(s);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LT(r.fitted_constants.at("equality_max_error"), 1e-10);
  EXPECT_GT(r.fitted_constants.at("equality_trials"), 4000.0);
}

TEST(EntropyDuality, HandInstance) {
  // E = {1, 2}, counting measure, f = (1, 1), psi = log 2: both sides 2 log 2.
  const double lhs = 2 * std::log(2.0);
  const double rhs = 2 * std::log(1.0 / 2.0) + 2.0 * std::log(2 * std::exp(std::log(2.0)));
  EXPECT_NEAR(lhs, rhs, 1e-15);
}

TEST(ExpFamily, EntropyTermIsLambdaSquaredT) {
  // Independent quadrature of P_t(f log f) - P_t f log P_t f for f = e^{lambda x}.
  for (double lambda : {0.3, 1.0, 2.0})
    for (double t : {0.05, 0.5}) {
      const double pf = gauss_expect(0.2, 2 * t, [&](double x) { return std::exp(lambda * x); });
      const double pflf = gauss_expect(0.2, 2 * t, [&](double x) { return lambda * x * std::exp(lambda * x); });
      EXPECT_NEAR((pflf - pf * std::log(pf)) / pf, lambda * lambda * t, 1e-8);
    }
}

TEST(ExpFamily, GradientConstantApproachesOneQuarter) {
  const auto lambdas = grid(0.1, 5.0, 50), ts = grid(0.01, 1.0, 50), deltas = grid(0.01, 3.0, 60);
  const double f = exp_family_gradient_constant(lambdas, ts, deltas);
  EXPECT_GT(f, 0.125);
  EXPECT_LE(f, 0.25);
  // The sup over lambda of lambda - delta lambda^2 t is 1 / (4 delta t), at lambda = 50 here.
  EXPECT_NEAR(exp_family_gradient_constant(grid(0.01, 200.0, 200001), {0.1}, {0.1}),
              (1 / (4 * 0.01) - 0.2 / std::numbers::e) / (1 / 0.01 + 1), 1e-6);
}

TEST(ExpFamily, HarnackConstantBelowYoungBound) {
  const auto lambdas = grid(0.1, 3.0, 40), rhos = grid(0.1, 2.0, 30), ts = grid(0.05, 1.0, 30);
  for (double alpha : {1.5, 2.0, 4.0, 64.0}) {
    const double c = exp_family_harnack_constant(alpha, lambdas, rhos, ts);
    if (alpha < 10) EXPECT_GT(c, 0.0);  // at alpha = 64 the 2(alpha - 1)/e term absorbs everything
    EXPECT_LE(c, 1.0 / (4 * alpha) + 1e-12) << alpha;
  }
  EXPECT_EQ(exp_family_harnack_constant(2.0, lambdas, {0.0}, ts), 0.0);
}

TEST(KernelBound, EuclideanClosedFormConstant) {
  const auto rhos = grid(0.0, 3.0, 31);
  for (double delta : {2.1, 4.0, 8.0})
    for (double t : {0.01, 0.25, 0.9})
      EXPECT_NEAR(euclidean_kernel_constant(2, delta, t, rhos), 0.5 * std::log(0.5), 1e-12);
  // Away from the diagonal the constant strictly decreases in delta.
  const std::vector<double> far = {1.0};
  EXPECT_GT(euclidean_kernel_constant(2, 2.1, 0.25, far), euclidean_kernel_constant(2, 8.0, 0.25, far));
  auto s = spec_for(CheckName::KernelBound, ManifoldModel::euclidean(2));
  s.ranges["delta"] = {2.1, 8.0};
  EXPECT_TRUE(run_check(s).pass);
}

TEST(KernelBound, HyperbolicClosedFormAndSphereEstimate) {
  EXPECT_TRUE(run_check(spec_for(CheckName::KernelBound, ManifoldModel::hyperbolic(3))).pass);
  auto s = spec_for(CheckName::KernelBound, ManifoldModel::sphere(2));
  s.params["n_paths"] = 20000;
  s.params["dt"] = 5e-3;
  s.params["n_t"] = 3;
  s.ranges["t"] = {0.1, 0.5};
  const auto r = run_check(s);
  EXPECT_TRUE(std::isfinite(r.fitted_constants.at("C_delta2.10")));
}

TEST(Varadhan, InterceptIsMinusRhoSquared) {
  // d = 1, rho = 1, t = 0.01: 4t log p = -1 - 0.02 log(0.04 pi).
  EXPECT_NEAR(-1 - 0.02 * std::log(0.04 * kPi), -0.957, 2e-3);
  for (auto m : {ManifoldModel::euclidean(1), ManifoldModel::euclidean(3), ManifoldModel::hyperbolic(3)}) {
    const auto r = run_check(spec_for(CheckName::Varadhan, m));
    EXPECT_TRUE(r.pass) << m.name();
    EXPECT_NEAR(r.fitted_constants.at("intercept_rho1.0"), -1.0, 0.05);
    EXPECT_NEAR(r.fitted_constants.at("intercept_rho0.0"), 0.0, 1e-3);
  }
  const auto r = run_check(spec_for(CheckName::Varadhan, ManifoldModel::sphere(2)));
  ASSERT_FALSE(r.notes.empty());
}

TEST(LocalGradient, GaussianAndScaleInvariance) {
  std::vector<double> xs, ts;
  for (int j = 0; j <= 200; ++j) xs.push_back(-1.0 + j / 100.0);
  for (int i = 0; i <= 20; ++i) ts.push_back(0.5 + i / 40.0);
  const auto gauss = [&](double t, std::size_t j) { return std::exp(-(xs[j] - 0.5) * (xs[j] - 0.5) / (4 * t)) / std::sqrt(4 * kPi * t); };
  const auto a = fit_a1(gauss, xs, ts, 0.0, 1.0, 1.0, 0.5, 0.0);
  const auto b = fit_a1([&](double t, std::size_t j) { return 2 * gauss(t, j); }, xs, ts, 0.0, 1.0, 1.0, 0.5, 0.0);
  EXPECT_GT(a.c, 0.0);
  EXPECT_LE(a.c, 4.0);
  EXPECT_NEAR(a.c, b.c, 1e-12);
  EXPECT_LT(a.identity_error, 1e-12);
  const auto flat = fit_a1([](double, std::size_t) { return 3.0; }, xs, ts, 0.0, 1.0, 1.0, 0.5, 0.0);
  EXPECT_EQ(flat.c, 0.0);
}

TEST(LocalGradient, OracleSolutionsAcrossResolutions) {
  auto s = spec_for(CheckName::AppendixA1);
  s.params["n_x_coarse"] = 128;
  s.params["n_x_fine"] = 256;
  s.params["n_t"] = 20;
  const auto r = run_check(s);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.fitted_constants.at("c_gaussian"), 4.0);
}

TEST(GradientCheck, EuclideanSmallRun) {
  auto s = spec_for(CheckName::Thm11);
  s.trial_count = 60;
  s.params["n_pairs"] = 4000;
  s.params["n_t"] = 2;
  const auto r = run_check(s);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GT(r.fitted_constants.at("F_max"), 0.0);
  EXPECT_TRUE(std::isfinite(r.fitted_constants.at("F_max")));
  EXPECT_EQ(r.rows.size() + r.skipped, r.trials);
}

TEST(GradientCheck, IntervalSmallRun) {
  auto s = spec_for(CheckName::Prop31);
  s.domain = DomainSpec::interval(0.0, kPi);
  s.trial_count = 30;
  s.params["n_pairs"] = 4000;
  s.params["n_t"] = 2;
  s.params["dt"] = 4e-3;
  s.ranges["t"] = {0.5, 2.0};
  const auto r = run_check(s);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_TRUE(std::isfinite(r.fitted_constants.at("C_max")));
  EXPECT_THROW(run_check(spec_for(CheckName::Prop31)), std::invalid_argument);
}

TEST(Harnack, JensenCaseAndSphere) {
  auto s = spec_for(CheckName::Harnack, ManifoldModel::sphere(2));
  s.trial_count = 80;
  s.params["n_paths"] = 5000;
  s.params["dt"] = 0.01;
  const auto r = run_check(s);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(std::isfinite(r.fitted_constants.at("C")));
}

TEST(Harness, ReportsIndependentOfWorkerCount) {
  auto s = spec_for(CheckName::Harnack);
  s.trial_count = 30;
  s.params["n_paths"] = 2000;
  s.params["dt"] = 0.01;
  s.workers = 1;
  const auto a = to_json(run_check(s));
  s.workers = 3;
  const auto b = to_json(run_check(s));
  EXPECT_EQ(a, b);
  auto t = spec_for(CheckName::Thm11, ManifoldModel::euclidean(2));
  t.trial_count = 16;
  t.params["n_pairs"] = 500;
  t.params["n_t"] = 2;
  t.params["n_points"] = 2;
  t.workers = 1;
  const auto c = to_json(run_check(t));
  t.workers = 4;
  EXPECT_EQ(c, to_json(run_check(t)));
}

TEST(Harness, TimingOnlyWhenRequested) {
  auto s = spec_for(CheckName::Varadhan);
  EXPECT_FALSE(run_check(s).runtime_ms.has_value());
  s.timing = true;
  EXPECT_TRUE(run_check(s).runtime_ms.has_value());
}

TEST(ExitChecks, CombinedReportNeedsBothParts) {
  auto s = spec_for(CheckName::Lemma22_23);
  s.params["n_paths"] = 20000;
  s.params["dt"] = 2e-3;
  s.params["n_t"] = 12;
  const auto r = run_check(s);
  EXPECT_TRUE(r.fitted_constants.count("lemma22.residual"));
  EXPECT_TRUE(r.fitted_constants.count("lemma23.x0.C"));
  EXPECT_TRUE(r.pass);
}

TEST(DirichletOracleChecks, Wrappers) {
  EXPECT_TRUE(run_check(spec_for(CheckName::Lemma21)).pass);
  auto p = spec_for(CheckName::Prop25);
  p.params["n_x_coarse"] = 128;
  p.params["n_x_fine"] = 256;
  p.params["n_t"] = 50;
  EXPECT_TRUE(std::isfinite(run_check(p).fitted_constants.at("C_fine")));
}
