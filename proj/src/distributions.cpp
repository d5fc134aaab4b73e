#include "gwi/distributions.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/geometric_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

namespace gwi {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kNormalizationTolerance = 1e-12;
// Largest mean accepted for a single Poisson draw; beyond this the result
// could not be represented as a count anyway.
constexpr double kMaxPoissonMean = 4.0e18;

Count checked_add(Count a, Count b) {
  if (a > std::numeric_limits<Count>::max() - b) {
    throw CountOverflow("population count overflow in sum");
  }
  return a + b;
}

Count checked_mul(Count a, Count b) {
  if (a != 0 && b > std::numeric_limits<Count>::max() / a) {
    throw CountOverflow("population count overflow in product");
  }
  return a * b;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Count draw_poisson(double mean, RandomStream& stream) {
  if (mean <= 0.0) return 0;
  if (!(mean < kMaxPoissonMean)) {
    throw CountOverflow("Poisson mean " + std::to_string(mean) + " exceeds the count range");
  }
  boost::random::poisson_distribution<std::int64_t, double> poisson(mean);
  return static_cast<Count>(poisson(stream));
}

Count draw_binomial(Count trials, double p, RandomStream& stream) {
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  if (trials > static_cast<Count>(std::numeric_limits<std::int64_t>::max())) {
    throw CountOverflow("binomial trial count exceeds the supported range");
  }
  boost::random::binomial_distribution<std::int64_t, double> binomial(
      static_cast<std::int64_t>(trials), p);
  return static_cast<Count>(binomial(stream));
}

std::vector<double> table_weights(const DistributionVariant& v) {
  if (const auto* t = std::get_if<TablePmf>(&v)) {
    std::vector<double> w;
    w.reserve(t->atoms.size());
    for (const auto& [value, prob] : t->atoms) w.push_back(prob);
    return w;
  }
  return {1.0};
}

}  // namespace

Distribution::Distribution(DistributionVariant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const Poisson& d) {
                   require(std::isfinite(d.lambda) && d.lambda > 0.0,
                           "poisson: lambda must be positive and finite");
                 },
                 [](const Geometric& d) {
                   require(d.p > 0.0 && d.p <= 1.0, "geometric: p must lie in (0, 1]");
                 },
                 [](const TwoPoint& d) {
                   require(d.p >= 0.0 && d.p <= 1.0, "two_point: p must lie in [0, 1]");
                 },
                 [](const PointMass&) {},
                 [](const TablePmf& d) {
                   require(!d.atoms.empty(), "table: at least one atom required");
                   double total = 0.0;
                   for (const auto& [value, prob] : d.atoms) {
                     require(prob >= 0.0 && prob <= 1.0, "table: probabilities must lie in [0, 1]");
                     total += prob;
                   }
                   require(std::abs(total - 1.0) <= kNormalizationTolerance,
                           "table: probabilities must sum to 1 (got " + std::to_string(total) + ")");
                 },
             },
             v_);
  alias_ = boost::random::discrete_distribution<std::size_t, double>(table_weights(v_));
}

double Distribution::mean() const {
  return std::visit(overloaded{
                        [](const Poisson& d) { return d.lambda; },
                        [](const Geometric& d) { return (1.0 - d.p) / d.p; },
                        [](const TwoPoint& d) {
                          return static_cast<double>(d.a) * (1.0 - d.p) + static_cast<double>(d.b) * d.p;
                        },
                        [](const PointMass& d) { return static_cast<double>(d.c); },
                        [](const TablePmf& d) {
                          double m = 0.0;
                          for (const auto& [value, prob] : d.atoms) m += static_cast<double>(value) * prob;
                          return m;
                        },
                    },
                    v_);
}

double Distribution::variance() const {
  return std::visit(overloaded{
                        [](const Poisson& d) { return d.lambda; },
                        [](const Geometric& d) { return (1.0 - d.p) / (d.p * d.p); },
                        [](const TwoPoint& d) {
                          const double gap = static_cast<double>(d.b) - static_cast<double>(d.a);
                          return gap * gap * d.p * (1.0 - d.p);
                        },
                        [](const PointMass&) { return 0.0; },
                        [](const TablePmf& d) {
                          double m = 0.0;
                          for (const auto& [value, prob] : d.atoms) m += static_cast<double>(value) * prob;
                          double v = 0.0;
                          for (const auto& [value, prob] : d.atoms) {
                            const double dev = static_cast<double>(value) - m;
                            v += dev * dev * prob;
                          }
                          return v;
                        },
                    },
                    v_);
}

bool Distribution::has_unit_mean() const {
  return std::visit(overloaded{
                        [](const Poisson& d) { return d.lambda == 1.0; },
                        [](const Geometric& d) { return d.p == 0.5; },
                        [](const TwoPoint& d) {
                          if (d.p == 0.0) return d.a == 1;
                          if (d.p == 1.0) return d.b == 1;
                          // a (1 - p) + b p == 1 with a, b integers; exact when
                          // the double arithmetic is, e.g. (0, 2, 1/2).
                          const double a = static_cast<double>(d.a);
                          const double b = static_cast<double>(d.b);
                          return a + (b - a) * d.p == 1.0;
                        },
                        [](const PointMass& d) { return d.c == 1; },
                        [this](const TablePmf&) { return std::abs(mean() - 1.0) < kNormalizationTolerance; },
                    },
                    v_);
}

Count Distribution::sample(RandomStream& stream) const {
  return std::visit(overloaded{
                        [&](const Poisson& d) { return draw_poisson(d.lambda, stream); },
                        [&](const Geometric& d) -> Count {
                          if (d.p == 1.0) return 0;
                          boost::random::geometric_distribution<std::int64_t, double> geo(d.p);
                          return static_cast<Count>(geo(stream));
                        },
                        [&](const TwoPoint& d) { return stream.uniform01() < d.p ? d.b : d.a; },
                        [](const PointMass& d) { return d.c; },
                        [&](const TablePmf& d) { return d.atoms[alias_(stream)].first; },
                    },
                    v_);
}

Count Distribution::sample_sum(Count count, RandomStream& stream) const {
  if (count == 0) return 0;
  return std::visit(overloaded{
                        [&](const Poisson& d) {
                          return draw_poisson(static_cast<double>(count) * d.lambda, stream);
                        },
                        [&](const Geometric& d) -> Count {
                          // Negative binomial as a Poisson-Gamma mixture.
                          if (d.p == 1.0) return 0;
                          boost::random::gamma_distribution<double> gamma(static_cast<double>(count),
                                                                         (1.0 - d.p) / d.p);
                          return draw_poisson(gamma(stream), stream);
                        },
                        [&](const TwoPoint& d) {
                          const Count hits = draw_binomial(count, d.p, stream);
                          return checked_add(checked_mul(d.a, count - hits), checked_mul(d.b, hits));
                        },
                        [&](const PointMass& d) { return checked_mul(d.c, count); },
                        [&](const TablePmf&) { return sample_sum_naive(count, stream); },
                    },
                    v_);
}

Count Distribution::sample_sum_naive(Count count, RandomStream& stream) const {
  Count total = 0;
  for (Count j = 0; j < count; ++j) total = checked_add(total, sample(stream));
  return total;
}

nlohmann::json Distribution::to_json() const {
  return std::visit(overloaded{
                        [](const Poisson& d) { return nlohmann::json{{"type", "poisson"}, {"lambda", d.lambda}}; },
                        [](const Geometric& d) { return nlohmann::json{{"type", "geometric"}, {"p", d.p}}; },
                        [](const TwoPoint& d) {
                          return nlohmann::json{{"type", "two_point"}, {"a", d.a}, {"b", d.b}, {"p", d.p}};
                        },
                        [](const PointMass& d) { return nlohmann::json{{"type", "point_mass"}, {"value", d.c}}; },
                        [](const TablePmf& d) {
                          nlohmann::json atoms = nlohmann::json::array();
                          for (const auto& [value, prob] : d.atoms) atoms.push_back({value, prob});
                          return nlohmann::json{{"type", "table"}, {"atoms", atoms}};
                        },
                    },
                    v_);
}

namespace {

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw std::invalid_argument(std::string("missing or non-numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

Count count_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() ||
      (j.at(key).is_number_integer() && !j.at(key).is_number_unsigned() && j.at(key).get<std::int64_t>() < 0)) {
    throw std::invalid_argument(std::string("field '") + key + "' must be a nonnegative integer");
  }
  return j.at(key).get<Count>();
}

}  // namespace

Distribution Distribution::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw std::invalid_argument("distribution must be an object with a string 'type'");
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "poisson") return poisson(number_field(j, "lambda"));
  if (type == "geometric") return geometric(number_field(j, "p"));
  if (type == "two_point") return two_point(count_field(j, "a"), count_field(j, "b"), number_field(j, "p"));
  if (type == "point_mass") return point_mass(count_field(j, "value"));
  if (type == "table") {
    if (!j.contains("atoms") || !j.at("atoms").is_array()) {
      throw std::invalid_argument("table: 'atoms' must be an array of [value, probability] pairs");
    }
    std::vector<std::pair<Count, double>> atoms;
    for (const auto& atom : j.at("atoms")) {
      if (!atom.is_array() || atom.size() != 2 || !(atom[0].is_number_unsigned() || (atom[0].is_number_integer() && atom[0].get<std::int64_t>() >= 0)) || !atom[1].is_number()) {
        throw std::invalid_argument("table: each atom must be [nonnegative integer, probability]");
      }
      atoms.emplace_back(atom[0].get<Count>(), atom[1].get<double>());
    }
    return table(std::move(atoms));
  }
  throw std::invalid_argument("unknown distribution type '" + type + "'");
}

std::string Distribution::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Poisson& d) { os << "Poisson(" << d.lambda << ")"; },
                 [&](const Geometric& d) { os << "Geometric(" << d.p << ")"; },
                 [&](const TwoPoint& d) { os << "TwoPoint(" << d.a << ", " << d.b << ", " << d.p << ")"; },
                 [&](const PointMass& d) { os << "PointMass(" << d.c << ")"; },
                 [&](const TablePmf& d) { os << "Table[" << d.atoms.size() << " atoms]"; },
             },
             v_);
  return os.str();
}

}  // namespace gwi
