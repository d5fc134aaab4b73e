#include "gwi/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gwi/parallel.hpp"

namespace gwi {

double kolmogorov_sd() {
  const double pi = std::numbers::pi;
  const double ln2 = std::numbers::ln2;
  return std::sqrt(pi * pi / 12.0 - pi / 2.0 * ln2 * ln2);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  const double pi = std::numbers::pi;
  if (lambda < 1.0) {
    // Jacobi theta form of the CDF; converges fast for small lambda.
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi * pi / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-300) break;
    }
    cdf *= std::sqrt(2.0 * pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

KSResult ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Per distinct value x the ECDF jumps from `lo` to `hi`; compare hi with F(x)
  // and lo with the left limit F(x-), so ties and atoms in cdf are exact.
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double x = sorted[i];
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(j) / n;
    const double left = cdf(std::nextafter(x, -std::numeric_limits<double>::infinity()));
    d = std::max({d, std::abs(hi - cdf(x)), std::abs(left - lo)});
    i = j;
  }
  KSResult r;
  r.statistic = std::clamp(d, 0.0, 1.0);
  r.n1 = sorted.size();
  r.p_value = kolmogorov_survival(std::sqrt(n) * r.statistic);
  return r;
}

KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one sample is exhausted its ECDF is 1; the other only climbs toward 1.
  d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  KSResult r;
  r.statistic = d;
  r.n1 = sa.size();
  r.n2 = sb.size();
  r.p_value = kolmogorov_survival(std::sqrt(na * nb / (na + nb)) * d);
  return r;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() == sb.size()) {
    std::vector<double> gaps(sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i) gaps[i] = std::abs(sa[i] - sb[i]);
    return pairwise_sum(gaps) / static_cast<double>(gaps.size());
  }
  // Integrate |Qa(u) - Qb(u)| over u in (0, 1); both quantile functions are
  // constant between the breakpoints i/na and j/nb.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double u = 0.0;
  double total = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    total += (next - u) * std::abs(sa[i] - sb[j]);
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return total;
}

MeanSe mean_and_se(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_and_se: empty input");
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  if (values.size() == 1) return {mean, 0.0};
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  const double var = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

VarianceSe variance_and_se(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("variance_and_se: need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> c2(values.size());
  std::vector<double> c4(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    c2[i] = d * d;
    c4[i] = c2[i] * c2[i];
  }
  const double m2 = pairwise_sum(c2) / n;
  const double m4 = pairwise_sum(c4) / n;
  return {m2 * n / (n - 1.0), std::sqrt(std::max(0.0, m4 - m2 * m2) / n)};
}

}  // namespace gwi
