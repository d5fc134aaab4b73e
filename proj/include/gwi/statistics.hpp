#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace gwi {

struct KSResult {
  double statistic = 0.0;
  std::uint64_t n1 = 0;
  std::optional<std::uint64_t> n2;  // empty when compared against an exact CDF
  double p_value = 1.0;             // asymptotic (Kolmogorov distribution)
};

/// Standard deviation of the Kolmogorov distribution, sqrt(pi^2/12 - (pi/2) ln^2 2).
/// Divided by sqrt(n) it gives the null standard error of a KS statistic.
double kolmogorov_sd();

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

/// sup_x |F_n(x) - cdf(x)|, both one-sided gaps evaluated at every sample point.
KSResult ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample sup gap between empirical CDFs over the merged order statistics.
KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// W1 between empirical laws: mean |a_(i) - b_(i)| for equal sizes, exact
/// quantile coupling otherwise.
double wasserstein1(std::span<const double> a, std::span<const double> b);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Sample mean and its standard error, reduced pairwise in index order.
MeanSe mean_and_se(std::span<const double> values);

struct VarianceSe {
  double variance = 0.0;  // unbiased sample variance
  double se = 0.0;        // sqrt((m4 - s^4) / N)
};

VarianceSe variance_and_se(std::span<const double> values);

}  // namespace gwi
