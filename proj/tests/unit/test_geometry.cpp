#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "difflab/geometry.hpp"

using namespace difflab;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<ManifoldModel> models() {
  return {ManifoldModel::euclidean(2), ManifoldModel::euclidean(3), ManifoldModel::sphere(2),
          ManifoldModel::sphere(3, 2.0), ManifoldModel::hyperbolic(2), ManifoldModel::hyperbolic(3)};
}

Point random_point(const ManifoldModel& m, std::mt19937_64& gen) {
  std::normal_distribution<double> n01;
  if (m.flat()) {
    Point p(m.coords());
    for (int i = 0; i < p.size(); ++i) p[i] = 2.0 * n01(gen);
    return p;
  }
  std::vector<double> z(m.dim);
  for (auto& v : z) v = n01(gen);
  const Tangent v = tangent_from_frame(m, m.origin(), z);
  if (m.kind == ModelKind::Sphere) {
    std::uniform_real_distribution<double> ang(0.0, 0.95 * kPi);
    return exp_map(m, m.origin(), (ang(gen) * m.radius / tangent_norm(m, v)) * v);
  }
  std::uniform_real_distribution<double> len(0.0, 3.0);
  return exp_map(m, m.origin(), (len(gen) / tangent_norm(m, v)) * v);
}

Tangent random_tangent(const ManifoldModel& m, const Point& x, std::mt19937_64& gen, double scale) {
  std::normal_distribution<double> n01;
  std::vector<double> z(m.dim);
  for (auto& v : z) v = scale * n01(gen);
  return tangent_from_frame(m, x, z);
}

// Rotation about unit axis k by angle th (Rodrigues).
Vec rodrigues(const Vec& v, const Vec& k, double th) {
  const Vec kxv{k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
  return std::cos(th) * v + std::sin(th) * kxv + (dot(k, v) * (1.0 - std::cos(th))) * k;
}

}  // namespace

TEST(Distance, Examples) {
  EXPECT_DOUBLE_EQ(distance(ManifoldModel::euclidean(2), Vec{0, 0}, Vec{3, 4}), 5.0);
  const auto s = ManifoldModel::sphere(2);
  EXPECT_NEAR(distance(s, Vec{1, 0, 0}, Vec{0, 1, 0}), kPi / 2, 1e-15);
  const auto h = ManifoldModel::hyperbolic(2);
  for (double t : {1e-6, 0.3, 1.0, 4.0}) {
    EXPECT_NEAR(distance(h, hyperbolic_point(h, t), h.origin()), t, 1e-12 * std::max(1.0, t));
    // closed form arccosh(-<x,y>_L)
    EXPECT_NEAR(std::acosh(-minkowski(hyperbolic_point(h, t), h.origin())), t, 1e-7);
  }
}

TEST(Distance, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 gen(11);
  for (const auto& m : models()) {
    for (int i = 0; i < 10000; ++i) {
      const Point x = random_point(m, gen), y = random_point(m, gen), z = random_point(m, gen);
      const double dxy = distance(m, x, y), dyx = distance(m, y, x);
      ASSERT_NEAR(dxy, dyx, 1e-9) << m.name();
      ASSERT_GE(dxy, 0.0);
      ASSERT_LE(dxy, distance(m, x, z) + distance(m, z, y) + 1e-9) << m.name();
    }
    const Point x = random_point(m, gen);
    EXPECT_EQ(distance(m, x, x), 0.0);
  }
}

TEST(ExpMap, Examples) {
  const auto e = ManifoldModel::euclidean(3);
  EXPECT_EQ(exp_map(e, Vec{1, 2, 3}, Vec{0.5, -1, 2}), (Vec{1.5, 1, 5}));
  const auto s = ManifoldModel::sphere(2);
  const Point q = exp_map(s, Vec{1, 0, 0}, Vec{0, kPi / 2, 0});
  EXPECT_NEAR(q[0], 0.0, 1e-15);
  EXPECT_NEAR(q[1], 1.0, 1e-15);
  EXPECT_NEAR(q[2], 0.0, 1e-15);
  const auto h = ManifoldModel::hyperbolic(2);
  const double z[2] = {0.6, 0.8};
  const Point p = exp_map(h, h.origin(), tangent_from_frame(h, h.origin(), z));
  EXPECT_NEAR(distance(h, h.origin(), p), 1.0, 1e-14);
  EXPECT_NEAR(p[0], std::cosh(1.0), 1e-14);
}

TEST(ExpMap, DistanceConsistencyBelowInjectivityRadius) {
  std::mt19937_64 gen(5);
  for (const auto& m : models()) {
    for (int i = 0; i < 5000; ++i) {
      const Point x = random_point(m, gen);
      Tangent v = random_tangent(m, x, gen, 1.0);
      const double len = tangent_norm(m, v);
      if (m.kind == ModelKind::Sphere && len > 0.95 * m.injectivity_radius())
        v *= 0.9 * m.injectivity_radius() / len;
      const Point y = exp_map(m, x, v);
      ASSERT_NO_THROW(validate_point(m, y));
      ASSERT_NEAR(distance(m, x, y), tangent_norm(m, v), 1e-8) << m.name();
      const Tangent back = log_map(m, x, y);
      ASSERT_NEAR(tangent_norm(m, back - v), 0.0, 1e-7) << m.name();
    }
  }
}

TEST(ExpMap, RejectsNonTangent) {
  const auto s = ManifoldModel::sphere(2);
  EXPECT_THROW(validate_tangent(s, Vec{1, 0, 0}, Vec{1, 0, 0}), std::invalid_argument);
  EXPECT_THROW(validate_point(s, Vec{1, 1, 0}), std::invalid_argument);
  EXPECT_THROW(validate_point(ManifoldModel::hyperbolic(2), Vec{1, 1, 0}), std::invalid_argument);
}

TEST(Transport, EuclideanIsIdentityWithChordNormal) {
  const auto e = ManifoldModel::euclidean(2);
  const auto r = transport_and_normal(e, Vec{0, 0}, Vec{3, 4}, Vec{1, 2});
  EXPECT_EQ(r.transported, (Vec{1, 2}));
  EXPECT_NEAR(r.normal[0], -0.6, 1e-15);
  EXPECT_NEAR(r.normal[1], -0.8, 1e-15);
}

TEST(Transport, SameBasePointConvention) {
  for (const auto& m : models()) {
    const Point x = m.origin();
    std::mt19937_64 gen(1);
    const Tangent v = random_tangent(m, x, gen, 1.0);
    const auto r = transport_and_normal(m, x, x, v);
    EXPECT_EQ(r.transported, v);
    EXPECT_EQ(tangent_norm(m, r.normal), 0.0);
  }
}

TEST(Transport, SphereMatchesRodriguesRotation) {
  const auto s = ManifoldModel::sphere(2);
  std::mt19937_64 gen(3);
  for (int i = 0; i < 2000; ++i) {
    const Point x = random_point(s, gen), y = random_point(s, gen);
    if (distance(s, x, y) > 0.9 * kPi || distance(s, x, y) < 1e-6) continue;
    const Tangent v = random_tangent(s, x, gen, 1.0);
    Vec k{x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
    k *= 1.0 / norm(k);
    const Vec expected = rodrigues(v, k, distance(s, x, y));
    const auto r = transport_and_normal(s, x, y, v);
    ASSERT_NEAR(norm(r.transported - expected), 0.0, 1e-10);
  }
  // quarter great circle: norm and angle with the geodesic tangent are kept
  const Point x{1, 0, 0}, y{0, 1, 0};
  const Tangent v{0, 0.6, 0.8};
  const auto r = transport_and_normal(s, x, y, v);
  EXPECT_NEAR(norm(r.transported), 1.0, 1e-14);
  const Vec tangent_at_y{-1, 0, 0};  // continuation of the geodesic x -> y
  EXPECT_NEAR(dot(r.transported, tangent_at_y), dot(v, Vec{0, 1, 0}), 1e-14);
}

TEST(Transport, IsometryAndNormalRoundTrip) {
  std::mt19937_64 gen(9);
  for (const auto& m : models()) {
    for (int i = 0; i < 3000; ++i) {
      const Point x = random_point(m, gen), y = random_point(m, gen);
      const double rho = distance(m, x, y);
      if (m.kind == ModelKind::Sphere && rho > 0.9 * m.injectivity_radius()) continue;
      const Tangent v = random_tangent(m, x, gen, 1.0);
      const auto r = transport_and_normal(m, x, y, v);
      ASSERT_NEAR(tangent_norm(m, r.transported), tangent_norm(m, v), 1e-10) << m.name();
      ASSERT_NO_THROW(validate_tangent(m, y, r.transported));
      ASSERT_NEAR(tangent_norm(m, r.normal), 1.0, 1e-10);
      const Point back = exp_map(m, y, rho * r.normal);
      ASSERT_NEAR(distance(m, back, x), 0.0, 1e-8 * std::max(1.0, rho)) << m.name();
    }
  }
}

TEST(Transport, RejectsAntipodalPair) {
  const auto s = ManifoldModel::sphere(2);
  EXPECT_THROW(transport_and_normal(s, Vec{1, 0, 0}, Vec{-1, 0, 0}, Vec{0, 1, 0}), std::invalid_argument);
}

TEST(VolumeBall, Examples) {
  EXPECT_NEAR(volume_ball(ManifoldModel::euclidean(1), Vec{0.3}, 0.7), 1.4, 1e-14);
  EXPECT_NEAR(volume_ball(ManifoldModel::euclidean(2), Vec{0, 0}, 1.5), kPi * 2.25, 1e-13);
  // Interval1D with V(x) = x: exact antiderivative e^hi - e^lo over B(x,r) cut to (a,b).
  const auto iv = ManifoldModel::interval(0.0, 2.0, Potential::linear(Vec{1.0}));
  EXPECT_NEAR(volume_ball(iv, Vec{0.5}, 0.3), std::exp(0.8) - std::exp(0.2), 1e-12);
  EXPECT_NEAR(volume_ball(iv, Vec{0.5}, 1.0), std::exp(1.5) - 1.0, 1e-12);
  // weighted Euclidean line with the same potential
  EXPECT_NEAR(volume_ball(ManifoldModel::euclidean(1, Potential::linear(Vec{1.0})), Vec{0.0}, 1.0),
              std::exp(1.0) - std::exp(-1.0), 1e-12);
  // 2-D Gaussian weight V = -|x|^2/2: 2 pi (1 - e^{-r^2/2})
  EXPECT_NEAR(volume_ball(ManifoldModel::euclidean(2, Potential::quadratic(1.0)), Vec{0, 0}, 1.2),
              2 * kPi * (1 - std::exp(-0.72)), 1e-10);
  // sphere S^2: 2 pi r^2 (1 - cos(th)); S^3 by quadrature vs closed form pi r^3 (2 th - sin 2 th)
  EXPECT_NEAR(volume_ball(ManifoldModel::sphere(2), Vec{1, 0, 0}, kPi), 4 * kPi, 1e-13);
  EXPECT_NEAR(volume_ball(ManifoldModel::sphere(3, 2.0), Vec{2, 0, 0, 0}, 1.0),
              kPi * 8.0 * (1.0 - std::sin(1.0)), 1e-10);
  EXPECT_NEAR(volume_ball(ManifoldModel::hyperbolic(3), Vec{1, 0, 0, 0}, 0.5),
              kPi * (std::sinh(1.0) - 1.0), 1e-13);
  EXPECT_THROW(volume_ball(ManifoldModel::euclidean(2), Vec{0, 0}, 0.0), std::invalid_argument);
}

TEST(Models, KappaConstants) {
  EXPECT_EQ(ManifoldModel::sphere(3).kappa, 0.0);
  EXPECT_EQ(ManifoldModel::hyperbolic(3).kappa, 2.0);
  EXPECT_EQ(ManifoldModel::euclidean(1, Potential::quadratic(1.0)).kappa, 0.0);
  EXPECT_EQ(ManifoldModel::euclidean(1, Potential::quadratic(-2.0)).kappa, 2.0);
  EXPECT_THROW(ManifoldModel::euclidean(0), std::invalid_argument);
}
