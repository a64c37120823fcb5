#pragma once

#include "difflab/geometry.hpp"

namespace difflab {

// Relatively compact domain D with the signed distance to its boundary
// (positive exactly on the interior).
struct DomainSpec {
  enum class Kind { Interval, Ball, SphericalCap };

  Kind kind = Kind::Interval;
  double a = 0.0;
  double b = 1.0;
  Point center;
  double radius = 1.0;  // geodesic radius for Ball; angular radius for SphericalCap

  static DomainSpec interval(double a, double b);
  static DomainSpec ball(Point center, double radius);
  static DomainSpec spherical_cap(Point pole, double angular_radius);
  // The natural domain of an Interval1D model.
  static DomainSpec of_model(const ManifoldModel& m);

  void validate(const ManifoldModel& m) const;

  // rho_dD(x) for interior x, negative outside.
  double boundary_distance(const ManifoldModel& m, const Point& x) const;
  bool contains(const ManifoldModel& m, const Point& x) const { return boundary_distance(m, x) > 0.0; }
  // Nearest boundary point along the radial geodesic (interval: nearer end).
  Point project_to_boundary(const ManifoldModel& m, const Point& x) const;
  // True when exits can be detected with the exact 1-D bridge test.
  bool one_dimensional(const ManifoldModel& m) const;
  double geodesic_radius(const ManifoldModel& m) const;
  // Lower end and upper end in 1-D form (interval or 1-D ball).
  double lower(const ManifoldModel& m) const;
  double upper(const ManifoldModel& m) const;
};

}  // namespace difflab
