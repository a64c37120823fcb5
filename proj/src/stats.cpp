#include "difflab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace difflab {

double pairwise_sum(std::span<const double> xs) noexcept {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.n = xs.size();
  if (r.n == 0) return r;
  r.mean = pairwise_sum(xs) / static_cast<double>(r.n);
  if (r.n < 2) return r;
  std::vector<double> dev(xs.size());
  std::transform(xs.begin(), xs.end(), dev.begin(), [&](double x) { return (x - r.mean) * (x - r.mean); });
  const double var = pairwise_sum(dev) / static_cast<double>(r.n - 1);
  r.std_error = std::sqrt(var / static_cast<double>(r.n));
  return r;
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_tail(double lambda) noexcept {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  return kolmogorov_tail((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

KsResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(i / n - f)});
  }
  return {d, ks_p(d, n), n};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  const std::vector<double> wa(a.size(), 1.0), wb(b.size(), 1.0);
  return ks_two_sample_weighted(a, wa, b, wb);
}

KsResult ks_two_sample_weighted(std::span<const double> a, std::span<const double> wa,
                                std::span<const double> b, std::span<const double> wb) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  if (a.size() != wa.size() || b.size() != wb.size())
    throw std::invalid_argument("ks_two_sample: weight size mismatch");
  auto order = [](std::span<const double> xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
    return idx;
  };
  auto kish = [](std::span<const double> w, double& total) {
    double s = 0.0, s2 = 0.0;
    for (double x : w) {
      if (x < 0.0) throw std::invalid_argument("ks_two_sample: negative weight");
      s += x;
      s2 += x * x;
    }
    total = s;
    return s2 > 0.0 ? s * s / s2 : 0.0;
  };
  double ta = 0.0, tb = 0.0;
  const double na = kish(wa, ta), nb = kish(wb, tb);
  if (!(ta > 0.0) || !(tb > 0.0)) throw std::invalid_argument("ks_two_sample: zero total weight");
  const auto ia = order(a), ib = order(b);
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  while (i < ia.size() || j < ib.size()) {
    const double xa = i < ia.size() ? a[ia[i]] : INFINITY;
    const double xb = j < ib.size() ? b[ib[j]] : INFINITY;
    const double x = std::min(xa, xb);
    while (i < ia.size() && a[ia[i]] == x) fa += wa[ia[i++]] / ta;
    while (j < ib.size() && b[ib[j]] == x) fb += wb[ib[j++]] / tb;
    d = std::max(d, std::abs(fa - fb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, ks_p(d, n_eff), n_eff};
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& design,
                                  std::span<const double> y) {
  if (design.empty() || design.size() != y.size())
    throw std::invalid_argument("least_squares: size mismatch");
  const auto rows = static_cast<Eigen::Index>(design.size());
  const auto cols = static_cast<Eigen::Index>(design.front().size());
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd v(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = design[i][j];
    v(i) = y[i];
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(v);
  return {beta.data(), beta.data() + beta.size()};
}

}  // namespace difflab
