#include "difflab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace difflab {

DomainSpec DomainSpec::interval(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("interval domain: need a < b");
  DomainSpec d;
  d.kind = Kind::Interval;
  d.a = a;
  d.b = b;
  return d;
}

DomainSpec DomainSpec::ball(Point center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball domain: radius must be positive");
  DomainSpec d;
  d.kind = Kind::Ball;
  d.center = center;
  d.radius = radius;
  return d;
}

DomainSpec DomainSpec::spherical_cap(Point pole, double angular_radius) {
  if (!(angular_radius > 0.0)) throw std::invalid_argument("cap domain: angle must be positive");
  DomainSpec d;
  d.kind = Kind::SphericalCap;
  d.center = pole;
  d.radius = angular_radius;
  return d;
}

DomainSpec DomainSpec::of_model(const ManifoldModel& m) {
  if (m.kind != ModelKind::Interval1D) throw std::invalid_argument("of_model: not an interval model");
  return interval(m.a, m.b);
}

void DomainSpec::validate(const ManifoldModel& m) const {
  switch (kind) {
    case Kind::Interval:
      if (!(m.flat() && m.dim == 1)) throw std::invalid_argument("interval domain needs a 1-D flat model");
      if (!(a < b)) throw std::invalid_argument("interval domain: need a < b");
      break;
    case Kind::Ball:
      validate_point(m, center);
      if (!(radius > 0.0) || radius >= 0.9 * m.injectivity_radius())
        throw std::invalid_argument("ball domain: radius must be positive and inside injectivity radius");
      break;
    case Kind::SphericalCap:
      if (m.kind != ModelKind::Sphere) throw std::invalid_argument("spherical cap needs a sphere model");
      validate_point(m, center);
      if (!(radius > 0.0) || radius >= 0.9 * std::numbers::pi)
        throw std::invalid_argument("spherical cap: angular radius out of range");
      break;
  }
}

double DomainSpec::geodesic_radius(const ManifoldModel& m) const {
  switch (kind) {
    case Kind::Interval: return 0.5 * (b - a);
    case Kind::Ball: return radius;
    case Kind::SphericalCap: return radius * m.radius;
  }
  return radius;
}

bool DomainSpec::one_dimensional(const ManifoldModel& m) const {
  return m.flat() && m.dim == 1 && (kind == Kind::Interval || kind == Kind::Ball);
}

double DomainSpec::lower(const ManifoldModel& m) const {
  (void)m;
  return kind == Kind::Interval ? a : center[0] - radius;
}

double DomainSpec::upper(const ManifoldModel& m) const {
  (void)m;
  return kind == Kind::Interval ? b : center[0] + radius;
}

double DomainSpec::boundary_distance(const ManifoldModel& m, const Point& x) const {
  if (kind == Kind::Interval) return std::min(x[0] - a, b - x[0]);
  return geodesic_radius(m) - distance(m, center, x);
}

Point DomainSpec::project_to_boundary(const ManifoldModel& m, const Point& x) const {
  if (one_dimensional(m)) {
    const double lo = lower(m), hi = upper(m);
    return Vec{(x[0] - lo) < (hi - x[0]) ? lo : hi};
  }
  const Tangent v = log_map(m, center, x);
  const double len = tangent_norm(m, v);
  if (len == 0.0) throw std::invalid_argument("project_to_boundary: point at the center");
  return exp_map(m, center, (geodesic_radius(m) / len) * v);
}

}  // namespace difflab
