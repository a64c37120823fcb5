#include "difflab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace difflab {

namespace {

constexpr double kPi = std::numbers::pi;

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-13);
}

double sphere_area(int d) {  // |S^{d-1}|
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

[[noreturn]] void reject(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

// ---------------------------------------------------------------- Potential

Potential Potential::zero() { return Potential{}; }

Potential Potential::linear(Vec a) {
  Potential p;
  p.kind_ = Kind::Linear;
  p.coeff_ = a;
  p.label_ = "linear";
  return p;
}

Potential Potential::quadratic(double k) {
  Potential p;
  p.kind_ = Kind::Quadratic;
  p.k_ = k;
  p.label_ = "quadratic";
  return p;
}

Potential Potential::custom(std::function<double(const Vec&)> value,
                            std::function<Vec(const Vec&)> gradient, double hess_upper,
                            std::string label) {
  if (!value || !gradient) reject("custom potential needs value and gradient");
  Potential p;
  p.kind_ = Kind::Custom;
  p.value_fn_ = std::move(value);
  p.gradient_fn_ = std::move(gradient);
  p.hess_upper_ = hess_upper;
  p.label_ = std::move(label);
  return p;
}

double Potential::value(const Vec& x) const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return dot(coeff_, x);
    case Kind::Quadratic: return -0.5 * k_ * dot(x, x);
    case Kind::Custom: return value_fn_(x);
  }
  return 0.0;
}

Vec Potential::gradient(const Vec& x) const {
  switch (kind_) {
    case Kind::Zero: return Vec(x.size());
    case Kind::Linear: return coeff_;
    case Kind::Quadratic: return -k_ * x;
    case Kind::Custom: return gradient_fn_(x);
  }
  return Vec(x.size());
}

double Potential::flat_kappa() const noexcept {
  switch (kind_) {
    case Kind::Zero:
    case Kind::Linear: return 0.0;
    case Kind::Quadratic: return std::max(0.0, -k_);
    case Kind::Custom: return std::max(0.0, hess_upper_);
  }
  return 0.0;
}

// ---------------------------------------------------------------- models

ManifoldModel ManifoldModel::euclidean(int d, Potential v) {
  if (d < 1 || d > kMaxCoords) reject("euclidean: dimension out of range");
  if (v.kind() == Potential::Kind::Linear && v.linear_coeff().size() != d)
    reject("euclidean: linear potential has wrong dimension");
  ManifoldModel m;
  m.kind = ModelKind::Euclidean;
  m.dim = d;
  m.kappa = v.flat_kappa();
  m.potential = std::move(v);
  return m;
}

ManifoldModel ManifoldModel::sphere(int d, double r) {
  if (d < 1 || d + 1 > kMaxCoords) reject("sphere: dimension out of range");
  if (!(r > 0.0)) reject("sphere: radius must be positive");
  ManifoldModel m;
  m.kind = ModelKind::Sphere;
  m.dim = d;
  m.radius = r;
  m.kappa = 0.0;  // Ric = (d-1)/r^2 >= 0 and Z = 0
  return m;
}

ManifoldModel ManifoldModel::hyperbolic(int d) {
  if (d < 1 || d + 1 > kMaxCoords) reject("hyperbolic: dimension out of range");
  ManifoldModel m;
  m.kind = ModelKind::Hyperbolic;
  m.dim = d;
  m.kappa = d - 1.0;  // Ric = -(d-1)
  return m;
}

ManifoldModel ManifoldModel::interval(double a, double b, Potential v) {
  if (!(a < b)) reject("interval: need a < b");
  if (v.kind() == Potential::Kind::Linear && v.linear_coeff().size() != 1)
    reject("interval: linear potential must be one-dimensional");
  ManifoldModel m;
  m.kind = ModelKind::Interval1D;
  m.dim = 1;
  m.a = a;
  m.b = b;
  m.kappa = v.flat_kappa();
  m.potential = std::move(v);
  return m;
}

int ManifoldModel::coords() const noexcept {
  return (kind == ModelKind::Sphere || kind == ModelKind::Hyperbolic) ? dim + 1 : dim;
}

double ManifoldModel::injectivity_radius() const noexcept {
  if (kind == ModelKind::Sphere) return kPi * radius;
  return std::numeric_limits<double>::infinity();
}

Point ManifoldModel::origin() const {
  Point x(coords());
  switch (kind) {
    case ModelKind::Sphere: x[0] = radius; break;
    case ModelKind::Hyperbolic: x[0] = 1.0; break;
    case ModelKind::Interval1D: x[0] = 0.5 * (a + b); break;
    case ModelKind::Euclidean: break;
  }
  return x;
}

std::string ManifoldModel::name() const {
  switch (kind) {
    case ModelKind::Euclidean: return "euclidean" + std::to_string(dim);
    case ModelKind::Sphere: return "sphere" + std::to_string(dim);
    case ModelKind::Hyperbolic: return "hyperbolic" + std::to_string(dim);
    case ModelKind::Interval1D: return "interval";
  }
  return "unknown";
}

// ---------------------------------------------------------------- points

void validate_point(const ManifoldModel& m, const Point& x) {
  if (x.size() != m.coords()) reject("point has wrong number of coordinates");
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) reject("point has non-finite coordinate");
  switch (m.kind) {
    case ModelKind::Sphere:
      if (std::abs(norm(x) - m.radius) > 1e-12 * std::max(1.0, m.radius))
        reject("point is not on the sphere");
      break;
    case ModelKind::Hyperbolic:
      if (x[0] <= 0.0 || std::abs(minkowski(x, x) + 1.0) > 1e-12 * std::max(1.0, x[0] * x[0]))
        reject("point is not on the hyperboloid");
      break;
    default: break;
  }
}

void validate_tangent(const ManifoldModel& m, const Point& x, const Tangent& v) {
  if (v.size() != m.coords()) reject("tangent vector has wrong number of coordinates");
  const double scale = std::max(1.0, norm(v) * norm(x));
  if (m.kind == ModelKind::Sphere && std::abs(dot(v, x)) > 1e-10 * scale)
    reject("vector is not tangent to the sphere");
  if (m.kind == ModelKind::Hyperbolic && std::abs(minkowski(v, x)) > 1e-10 * scale)
    reject("vector is not tangent to the hyperboloid");
}

Point renormalize(const ManifoldModel& m, Point x) {
  if (m.kind == ModelKind::Sphere) {
    x *= m.radius / norm(x);
  } else if (m.kind == ModelKind::Hyperbolic) {
    double s = 1.0;
    for (int i = 1; i < x.size(); ++i) s += x[i] * x[i];
    x[0] = std::sqrt(s);
  }
  return x;
}

Tangent project_tangent(const ManifoldModel& m, const Point& x, Tangent v) {
  if (m.kind == ModelKind::Sphere) {
    v -= (dot(v, x) / (m.radius * m.radius)) * x;
  } else if (m.kind == ModelKind::Hyperbolic) {
    v += minkowski(v, x) * x;
  }
  return v;
}

double tangent_dot(const ManifoldModel& m, const Tangent& u, const Tangent& v) {
  return m.kind == ModelKind::Hyperbolic ? minkowski(u, v) : dot(u, v);
}

double tangent_norm(const ManifoldModel& m, const Tangent& v) {
  return std::sqrt(std::max(0.0, tangent_dot(m, v, v)));
}

// ---------------------------------------------------------------- metric

double distance(const ManifoldModel& m, const Point& x, const Point& y) {
  switch (m.kind) {
    case ModelKind::Euclidean:
    case ModelKind::Interval1D: return norm(x - y);
    case ModelKind::Sphere:
      // 2r atan2(|x-y|, |x+y|) is accurate both near 0 and near pi r.
      return 2.0 * m.radius * std::atan2(norm(x - y), norm(x + y));
    case ModelKind::Hyperbolic: {
      const Vec d = x - y;
      const double chord2 = std::max(0.0, minkowski(d, d));
      return 2.0 * std::asinh(0.5 * std::sqrt(chord2));
    }
  }
  return 0.0;
}

Point exp_map(const ManifoldModel& m, const Point& x, const Tangent& v) {
  switch (m.kind) {
    case ModelKind::Euclidean:
    case ModelKind::Interval1D: return x + v;
    case ModelKind::Sphere: {
      const double len = norm(v);
      if (len == 0.0) return x;
      const double th = len / m.radius;
      return renormalize(m, std::cos(th) * x + (m.radius * std::sin(th) / len) * v);
    }
    case ModelKind::Hyperbolic: {
      const double len = tangent_norm(m, v);
      if (len == 0.0) return x;
      return renormalize(m, std::cosh(len) * x + (std::sinh(len) / len) * v);
    }
  }
  return x;
}

Tangent log_map(const ManifoldModel& m, const Point& x, const Point& y) {
  switch (m.kind) {
    case ModelKind::Euclidean:
    case ModelKind::Interval1D: return y - x;
    case ModelKind::Sphere: {
      const double rho = distance(m, x, y);
      if (rho == 0.0) return Tangent(x.size());
      if (rho > (1.0 - 1e-12) * m.injectivity_radius()) reject("log_map: antipodal points");
      const Tangent w = y - (dot(x, y) / (m.radius * m.radius)) * x;
      const double wn = norm(w);
      if (wn == 0.0) return Tangent(x.size());
      return (rho / wn) * w;
    }
    case ModelKind::Hyperbolic: {
      const double rho = distance(m, x, y);
      if (rho == 0.0) return Tangent(x.size());
      const Tangent w = y + minkowski(x, y) * x;
      const double wn = tangent_norm(m, w);
      if (wn == 0.0) return Tangent(x.size());
      return (rho / wn) * w;
    }
  }
  return Tangent(x.size());
}

TransportResult transport_and_normal(const ManifoldModel& m, const Point& x, const Point& y,
                                     const Tangent& v) {
  if (x == y) return {v, Tangent(x.size())};
  switch (m.kind) {
    case ModelKind::Euclidean:
    case ModelKind::Interval1D: {
      const Vec d = x - y;
      const double len = norm(d);
      if (len == 0.0) return {v, Tangent(x.size())};
      return {v, (1.0 / len) * d};
    }
    case ModelKind::Sphere: {
      const double r2 = m.radius * m.radius;
      const double denom = r2 + dot(x, y);
      if (denom <= 1e-12 * r2) reject("transport: antipodal pair (cut locus)");
      Tangent pv = v - (dot(y, v) / denom) * (x + y);
      pv = project_tangent(m, y, pv);
      Tangent n = log_map(m, y, x);
      const double nn = norm(n);
      if (nn > 0.0) n *= 1.0 / nn;
      return {pv, n};
    }
    case ModelKind::Hyperbolic: {
      const double denom = 1.0 - minkowski(x, y);
      Tangent pv = v + (minkowski(y, v) / denom) * (x + y);
      pv = project_tangent(m, y, pv);
      Tangent n = log_map(m, y, x);
      const double nn = tangent_norm(m, n);
      if (nn > 0.0) n *= 1.0 / nn;
      return {pv, n};
    }
  }
  return {v, Tangent(x.size())};
}

double volume_ball(const ManifoldModel& m, const Point& x, double r) {
  if (!(r > 0.0)) reject("volume_ball: radius must be positive");
  const int d = m.dim;
  switch (m.kind) {
    case ModelKind::Euclidean: {
      if (m.potential.is_zero()) return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(r, d);
      if (d == 1) {
        return integrate([&](double s) { return std::exp(m.potential.value(Vec{s})); }, x[0] - r,
                         x[0] + r);
      }
      if (d == 2) {
        auto ring = [&](double s) {
          return s * integrate(
                         [&](double phi) {
                           const Vec p{x[0] + s * std::cos(phi), x[1] + s * std::sin(phi)};
                           return std::exp(m.potential.value(p));
                         },
                         0.0, 2.0 * kPi);
        };
        return integrate(ring, 0.0, r);
      }
      reject("volume_ball: weighted Euclidean balls only for d <= 2");
    }
    case ModelKind::Interval1D: {
      const double lo = std::max(m.a, x[0] - r);
      const double hi = std::min(m.b, x[0] + r);
      return integrate([&](double s) { return std::exp(m.potential.value(Vec{s})); }, lo, hi);
    }
    case ModelKind::Sphere: {
      const double th = std::min(r / m.radius, kPi);
      if (d == 1) return 2.0 * m.radius * th;
      if (d == 2) return 2.0 * kPi * m.radius * m.radius * (1.0 - std::cos(th));
      return sphere_area(d) * std::pow(m.radius, d) *
             integrate([&](double s) { return std::pow(std::sin(s), d - 1); }, 0.0, th);
    }
    case ModelKind::Hyperbolic: {
      if (d == 1) return 2.0 * r;
      if (d == 2) return 2.0 * kPi * (std::cosh(r) - 1.0);
      if (d == 3) return kPi * (std::sinh(2.0 * r) - 2.0 * r);
      return sphere_area(d) * integrate([&](double s) { return std::pow(std::sinh(s), d - 1); }, 0.0, r);
    }
  }
  return 0.0;
}

Tangent tangent_from_frame(const ManifoldModel& m, const Point& x, std::span<const double> coeffs) {
  if (static_cast<int>(coeffs.size()) != m.dim) reject("tangent_from_frame: need dim coefficients");
  switch (m.kind) {
    case ModelKind::Euclidean:
    case ModelKind::Interval1D: {
      Tangent v(m.dim);
      for (int i = 0; i < m.dim; ++i) v[i] = coeffs[i];
      return v;
    }
    case ModelKind::Sphere: {
      // Householder reflection taking the pole e_0 to x/r carries the standard
      // frame of T_{e_0} isometrically onto T_x.
      Tangent v0(m.dim + 1);
      for (int i = 0; i < m.dim; ++i) v0[i + 1] = coeffs[i];
      Vec u = unit(m.dim + 1, 0) - (1.0 / m.radius) * x;
      const double uu = dot(u, u);
      if (uu < 1e-28) return v0;
      return v0 - (2.0 * dot(u, v0) / uu) * u;
    }
    case ModelKind::Hyperbolic: {
      Tangent v0(m.dim + 1);
      for (int i = 0; i < m.dim; ++i) v0[i + 1] = coeffs[i];
      Vec o = unit(m.dim + 1, 0);
      return v0 + (minkowski(x, v0) / (1.0 + x[0])) * (o + x);
    }
  }
  return Tangent(x.size());
}

Tangent drift(const ManifoldModel& m, const Point& x) {
  if (m.flat()) return m.potential.gradient(x);
  return Tangent(x.size());
}

double potential_value(const ManifoldModel& m, const Point& x) {
  return m.flat() ? m.potential.value(x) : 0.0;
}

Point sphere_point(const ManifoldModel& m, double angle, int axis) {
  if (m.kind != ModelKind::Sphere) reject("sphere_point: not a sphere model");
  Point p(m.coords());
  p[0] = m.radius * std::cos(angle);
  p[axis] = m.radius * std::sin(angle);
  return p;
}

Point hyperbolic_point(const ManifoldModel& m, double dist, int axis) {
  if (m.kind != ModelKind::Hyperbolic) reject("hyperbolic_point: not a hyperbolic model");
  Point p(m.coords());
  p[0] = std::cosh(dist);
  p[axis] = std::sinh(dist);
  return p;
}

}  // namespace difflab
