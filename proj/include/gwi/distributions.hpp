#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/random/discrete_distribution.hpp>
#include "json.hpp"

#include "gwi/random_stream.hpp"

namespace gwi {

using Count = std::uint64_t;

struct Poisson {
  double lambda;
};

/// Failures before the first success: P(k) = (1 - p)^k p on {0, 1, ...}.
struct Geometric {
  double p;
};

/// Value b with probability p, value a otherwise.
struct TwoPoint {
  Count a;
  Count b;
  double p;
};

struct PointMass {
  Count c;
};

struct TablePmf {
  std::vector<std::pair<Count, double>> atoms;
};

using DistributionVariant = std::variant<Poisson, Geometric, TwoPoint, PointMass, TablePmf>;

/// Thrown when a population count would leave the 64-bit range.
class CountOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/*
 * A law on the nonnegative integers with finite variance.
 *
 * Values are validated on construction and immutable afterwards, so a single
 * Distribution can be shared by any number of threads; sampling only mutates
 * the caller's RandomStream.
 */
class Distribution {
 public:
  explicit Distribution(DistributionVariant v);

  static Distribution poisson(double lambda) { return Distribution(Poisson{lambda}); }
  static Distribution geometric(double p) { return Distribution(Geometric{p}); }
  static Distribution two_point(Count a, Count b, double p) { return Distribution(TwoPoint{a, b, p}); }
  static Distribution point_mass(Count c) { return Distribution(PointMass{c}); }
  static Distribution table(std::vector<std::pair<Count, double>> atoms) {
    return Distribution(TablePmf{std::move(atoms)});
  }

  double mean() const;
  double variance() const;

  /// True iff the mean is exactly one. Exact for every variant except
  /// TablePmf, which is compared within 1e-12.
  bool has_unit_mean() const;

  Count sample(RandomStream& stream) const;

  /// Draw distributed as the count-fold convolution of this law, using the
  /// closed form of the convolution where one exists.
  Count sample_sum(Count count, RandomStream& stream) const;

  /// count independent sample() calls added up. Reference path for sample_sum.
  Count sample_sum_naive(Count count, RandomStream& stream) const;

  const DistributionVariant& variant() const { return v_; }

  nlohmann::json to_json() const;
  static Distribution from_json(const nlohmann::json& j);

  std::string describe() const;

 private:
  DistributionVariant v_;
  boost::random::discrete_distribution<std::size_t, double> alias_;
};

}  // namespace gwi
