#pragma once

#include <functional>
#include <span>
#include <string>

#include "difflab/vec.hpp"

namespace difflab {

using Point = Vec;
using Tangent = Vec;

// Potential V of the weighted measure e^V dx; its gradient Z = grad V is the
// drift of L = Delta + grad V. Closed set of kinds so the inner loops never go
// through std::function unless the caller asks for a custom potential.
class Potential {
 public:
  enum class Kind { Zero, Linear, Quadratic, Custom };

  static Potential zero();
  // V(x) = <a, x>.
  static Potential linear(Vec a);
  // V(x) = -k |x|^2 / 2, so Z(x) = -k x (Ornstein-Uhlenbeck drift for k > 0).
  static Potential quadratic(double k);
  // hess_upper: an upper bound of the largest eigenvalue of Hess V.
  static Potential custom(std::function<double(const Vec&)> value,
                          std::function<Vec(const Vec&)> gradient, double hess_upper,
                          std::string label = "custom");

  Kind kind() const noexcept { return kind_; }
  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  // Smallest kappa >= 0 with -Hess V >= -kappa, i.e. Ric - grad Z >= -kappa on flat space.
  double flat_kappa() const noexcept;
  bool is_zero() const noexcept { return kind_ == Kind::Zero; }
  const std::string& label() const noexcept { return label_; }
  const Vec& linear_coeff() const noexcept { return coeff_; }
  double quadratic_k() const noexcept { return k_; }

 private:
  Kind kind_ = Kind::Zero;
  Vec coeff_;
  double k_ = 0.0;
  double hess_upper_ = 0.0;
  std::function<double(const Vec&)> value_fn_;
  std::function<Vec(const Vec&)> gradient_fn_;
  std::string label_ = "zero";
};

enum class ModelKind { Euclidean, Sphere, Hyperbolic, Interval1D };

// Chart-level description of a model space. Sphere points live on the radius-r
// sphere in R^{d+1}; hyperbolic points on the upper sheet of the hyperboloid
// <x,x>_L = -1 in R^{d+1}. Interval1D is the real line carrying the potential,
// with (a, b) as its natural Dirichlet domain.
struct ManifoldModel {
  ModelKind kind = ModelKind::Euclidean;
  int dim = 1;
  double radius = 1.0;
  double a = 0.0;
  double b = 0.0;
  Potential potential;
  double kappa = 0.0;

  static ManifoldModel euclidean(int d, Potential v = Potential::zero());
  static ManifoldModel sphere(int d, double r = 1.0);
  static ManifoldModel hyperbolic(int d);
  static ManifoldModel interval(double a, double b, Potential v = Potential::zero());

  int coords() const noexcept;
  double injectivity_radius() const noexcept;
  Point origin() const;
  std::string name() const;
  bool flat() const noexcept { return kind == ModelKind::Euclidean || kind == ModelKind::Interval1D; }
};

// Throws std::invalid_argument when x is not a point of m.
void validate_point(const ManifoldModel& m, const Point& x);
void validate_tangent(const ManifoldModel& m, const Point& x, const Tangent& v);

// Re-projects onto the model after arithmetic (sphere/hyperboloid drift).
Point renormalize(const ManifoldModel& m, Point x);
Tangent project_tangent(const ManifoldModel& m, const Point& x, Tangent v);

// Riemannian norm of a tangent vector.
double tangent_norm(const ManifoldModel& m, const Tangent& v);
double tangent_dot(const ManifoldModel& m, const Tangent& u, const Tangent& v);

double distance(const ManifoldModel& m, const Point& x, const Point& y);
Point exp_map(const ManifoldModel& m, const Point& x, const Tangent& v);
// Inverse of exp_map inside the injectivity radius.
Tangent log_map(const ManifoldModel& m, const Point& x, const Point& y);

struct TransportResult {
  Tangent transported;  // P_{x,y} v, a tangent vector at y
  Tangent normal;       // n(y, x): unit initial velocity at y of the geodesic to x
};

// Parallel transport along the minimal geodesic x -> y together with n(y, x).
// For x == y returns (v, 0).
TransportResult transport_and_normal(const ManifoldModel& m, const Point& x, const Point& y,
                                     const Tangent& v);

// mu(B(x, r)) with mu = e^V dvol.
double volume_ball(const ManifoldModel& m, const Point& x, double r);

// Tangent vector at x with the given coordinates in a fixed orthonormal frame.
Tangent tangent_from_frame(const ManifoldModel& m, const Point& x, std::span<const double> coeffs);

// Z(x) = grad V(x); zero on sphere and hyperbolic models.
Tangent drift(const ManifoldModel& m, const Point& x);
double potential_value(const ManifoldModel& m, const Point& x);

// Convenience constructors for points on the curved models.
Point sphere_point(const ManifoldModel& m, double angle, int axis = 1);
Point hyperbolic_point(const ManifoldModel& m, double dist, int axis = 1);

}  // namespace difflab
