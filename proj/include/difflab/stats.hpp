#pragma once

#include <functional>
#include <span>
#include <vector>

namespace difflab {

// Pairwise summation in a fixed tree order: the result depends only on the
// input sequence, never on how it was produced.
double pairwise_sum(std::span<const double> xs) noexcept;

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

double normal_cdf(double x) noexcept;

// Asymptotic Kolmogorov tail probability P(K > lambda).
double kolmogorov_tail(double lambda) noexcept;

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
  double n_effective = 0.0;
};

// One-sample KS against a continuous CDF.
KsResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);

// Two-sample KS. Weighted samples are allowed on either side; the effective
// size of a weighted side is Kish's (sum w)^2 / sum w^2.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
KsResult ks_two_sample_weighted(std::span<const double> a, std::span<const double> wa,
                                std::span<const double> b, std::span<const double> wb);

// Ordinary least squares y ~ X beta; rows of `design` are observations.
std::vector<double> least_squares(const std::vector<std::vector<double>>& design,
                                  std::span<const double> y);

}  // namespace difflab
