#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "difflab/domain.hpp"
#include "difflab/geometry.hpp"
#include "difflab/report.hpp"

namespace difflab {

enum class CheckName {
  Thm11,
  Prop31,
  Harnack,
  KernelBound,
  Lemma25,
  Varadhan,
  AppendixA1,
  Lemma22,
  Lemma23,
  Lemma22_23,
  Lemma21,
  Prop25,
};

std::string to_string(CheckName n);
// Throws std::invalid_argument on an unknown name.
CheckName check_from_string(const std::string& s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct CheckSpec {
  CheckName name = CheckName::Lemma25;
  ManifoldModel model = ManifoldModel::euclidean(1);
  std::optional<DomainSpec> domain;
  std::size_t trial_count = 200;
  double tolerance_sigma = 3.0;
  // Keys: "t", "delta", "alpha", "lambda". Missing keys take per-check defaults.
  std::map<std::string, Range> ranges;
  // Scalar knobs (n_paths, dt, grid sizes, ...); missing keys take defaults.
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  int workers = 0;
  bool timing = false;

  // Throws std::invalid_argument: trial_count >= 1, alpha > 1, delta > 0,
  // t in (0, 1] (prop31 also accepts t up to 2 for the t > 1 branch).
  void validate() const;
  double param(const std::string& key, double fallback) const;
  Range range(const std::string& key, Range fallback) const;
};

// Positive bounded test functions (floor 1e-6): clipped exponentials of a
// coordinate, Gaussian bumps and smoothed indicators of geodesic balls.
struct TestFamilyMember {
  enum class Kind { ClippedExp, Bump, SmoothIndicator } kind = Kind::ClippedExp;
  double lambda = 1.0;  // exponent for ClippedExp
  double clip = 50.0;
  int axis = 0;         // coordinate index used by ClippedExp
  Point center;         // Bump and SmoothIndicator
  double width = 0.5;   // bump sd, indicator radius
  double soft = 0.1;    // indicator transition width

  double operator()(const ManifoldModel& m, const Point& x) const;
  std::string label() const;
};

CheckReport check_thm11(const CheckSpec& spec);
CheckReport check_prop31(const CheckSpec& spec);
CheckReport check_harnack(const CheckSpec& spec);
CheckReport check_kernel_bound(const CheckSpec& spec);
CheckReport check_lemma25(const CheckSpec& spec);
CheckReport check_varadhan(const CheckSpec& spec);
CheckReport check_appendix_a1(const CheckSpec& spec);
CheckReport check_lemma22(const CheckSpec& spec);
CheckReport check_lemma23(const CheckSpec& spec);
CheckReport check_lemma22_23(const CheckSpec& spec);
CheckReport check_lemma21(const CheckSpec& spec);
CheckReport check_prop25(const CheckSpec& spec);

// Dispatches on spec.name, validates first and sets runtime_ms when
// spec.timing is on.
CheckReport run_check(const CheckSpec& spec);

// Closed-form sweeps on Euclidean d = 1 with f = e^{lambda x}.
// Minimal F in the gradient estimate over the (lambda, t, delta) grid.
double exp_family_gradient_constant(const std::vector<double>& lambdas, const std::vector<double>& ts,
                                    const std::vector<double>& deltas);
// Minimal C in the power Harnack inequality over the (lambda, rho, t) grid.
double exp_family_harnack_constant(double alpha, const std::vector<double>& lambdas,
                                   const std::vector<double>& rhos, const std::vector<double>& ts);

// Minimal c in |grad log u| <= c (1/R + T^{-1/2} + sqrt K)(1 + log(sup u / u))
// on Q_{R/2,T/2}, for u(t, x_j) given on a 1-D node grid (central differences
// in x), with Q_{R,T} = [x0 - R, x0 + R] x [t0 - T, t0]. identity_error checks
// omega (1 - f)^2 = |grad f|^2 for f = log(u / sup u).
struct A1Fit {
  double c = 0.0;
  double identity_error = 0.0;
  std::size_t evaluated = 0;
};
A1Fit fit_a1(const std::function<double(double, std::size_t)>& u, const std::vector<double>& xs,
             const std::vector<double>& ts, double x0, double R, double t0, double T, double K);

// Minimal C_delta(t) for the Euclidean heat-kernel bound at one t over the rho grid.
double euclidean_kernel_constant(int d, double delta, double t, const std::vector<double>& rhos);

}  // namespace difflab
