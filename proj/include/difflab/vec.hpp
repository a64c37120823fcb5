#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>

namespace difflab {

// Chart coordinates of every model fit in this many doubles (hyperbolic d=7 is
// the largest ambient chart we allow).
inline constexpr int kMaxCoords = 8;

// Small fixed-capacity coordinate vector. Points and tangent vectors share the
// representation; which one a Vec holds is given by context.
struct Vec {
  std::array<double, kMaxCoords> c{};
  int n = 0;

  Vec() = default;
  explicit Vec(int size) : n(size) {
    if (size < 0 || size > kMaxCoords) throw std::invalid_argument("Vec: size out of range");
  }
  Vec(std::initializer_list<double> xs) : n(static_cast<int>(xs.size())) {
    if (n > kMaxCoords) throw std::invalid_argument("Vec: too many coordinates");
    int i = 0;
    for (double x : xs) c[i++] = x;
  }

  int size() const noexcept { return n; }
  double& operator[](int i) noexcept { return c[i]; }
  double operator[](int i) const noexcept { return c[i]; }

  Vec& operator+=(const Vec& o) noexcept {
    for (int i = 0; i < n; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) noexcept {
    for (int i = 0; i < n; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) noexcept {
    for (int i = 0; i < n; ++i) c[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
  friend Vec operator*(Vec a, double s) noexcept { return a *= s; }
  friend Vec operator*(double s, Vec a) noexcept { return a *= s; }
  friend Vec operator-(Vec a) noexcept { return a *= -1.0; }

  friend bool operator==(const Vec& a, const Vec& b) noexcept {
    if (a.n != b.n) return false;
    for (int i = 0; i < a.n; ++i)
      if (a.c[i] != b.c[i]) return false;
    return true;
  }
};

inline double dot(const Vec& a, const Vec& b) noexcept {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i) s += a.c[i] * b.c[i];
  return s;
}

inline double norm(const Vec& a) noexcept { return std::sqrt(dot(a, a)); }

// Minkowski product -x0 y0 + sum xi yi (hyperboloid chart).
inline double minkowski(const Vec& a, const Vec& b) noexcept {
  double s = -a.c[0] * b.c[0];
  for (int i = 1; i < a.n; ++i) s += a.c[i] * b.c[i];
  return s;
}

inline Vec zeros(int n) { return Vec(n); }

inline Vec unit(int n, int axis) {
  Vec v(n);
  v[axis] = 1.0;
  return v;
}

}  // namespace difflab
