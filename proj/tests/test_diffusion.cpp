#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "gwi/diffusion.hpp"
#include "gwi/statistics.hpp"
#include "gwi/step_process.hpp"

using gwi::RandomStream;
using gwi::SDEParams;

namespace {

// Regularized lower incomplete gamma by its power series; slow but independent
// of the library evaluation.
double gamma_p_series(double a, double x) {
  if (x <= 0.0) return 0.0;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return std::exp(a * std::log(x) - x - std::lgamma(a)) * sum;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS(SDEParams{-1.0, 1.0, 0.0}.validate());
  CHECK_THROWS(SDEParams{1.0, -1.0, 0.0}.validate());
  CHECK_NOTHROW(SDEParams{0.0, 0.0, -3.0}.validate());
}

TEST_CASE("zero diffusion gives the drift line") {
  RandomStream s(1, 0, 0);
  const auto line = gwi::euler_path({1.0, 0.0, 0.0}, 1.0, 16, s);
  REQUIRE(line.values.size() == 17);
  for (std::size_t i = 0; i < line.values.size(); ++i) {
    CHECK(line.times[i] == doctest::Approx(i / 16.0));
    CHECK(line.values[i] == doctest::Approx(line.times[i]).epsilon(1e-14));
  }
  const auto flat = gwi::euler_path({0.0, 0.0, 2.5}, 3.0, 10, s);
  for (double v : flat.values) CHECK(v == 2.5);
  CHECK(gwi::deterministic_path({2.0, 0.0, 1.0}, 1.0, 4).values.back() == 3.0);

  CHECK_THROWS_AS(gwi::exact_transition_path({1.0, 0.0, 0.0}, 1.0, 4, s), std::domain_error);
  CHECK_THROWS_AS(gwi::exact_transition_path({1.0, 1.0, -1.0}, 1.0, 4, s), std::domain_error);
}

TEST_CASE("Euler ensemble mean follows the drift (1e6 paths, 5 SE)") {
  const auto ends = gwi::euler_endpoints({1.0, 2.0, 0.0}, 1.0, 32, 1000000, 17, 1);
  const auto m = gwi::mean_and_se(ends);
  CHECK(std::abs(m.mean - 1.0) <= 5.0 * m.se);
}

TEST_CASE("Euler keeps negative iterates and truncates only the diffusion term") {
  const SDEParams p{0.1, 4.0, 0.0};
  bool saw_negative = false;
  for (std::uint64_t i = 0; i < 200; ++i) {
    RandomStream s(5, i, gwi::kDiffusionSlot);
    const auto path = gwi::euler_path(p, 1.0, 100, s);
    for (std::size_t j = 0; j + 1 < path.values.size(); ++j) {
      if (path.values[j] <= 0.0) {
        saw_negative = saw_negative || path.values[j] < 0.0;
        CHECK(path.values[j + 1] == doctest::Approx(path.values[j] + 0.1 * 0.01).epsilon(1e-12));
      }
    }
  }
  CHECK(saw_negative);
}

TEST_CASE("exact transitions: marginal moments (1e5 paths, 5 SE)") {
  struct Case {
    SDEParams p;
    double mean, var;
  };
  // E X_t = m t and Var X_t = sigma2 m t^2 / 2 at t = 1.
  for (const auto& c : {Case{{1.0, 2.0, 0.0}, 1.0, 1.0}, Case{{1.0, 1.0, 0.0}, 1.0, 0.5},
                        Case{{0.3, 2.0, 0.0}, 0.3, 0.3}}) {
    const auto ends = gwi::exact_endpoints(c.p, 1.0, 4, 100000, 3, 1);
    const auto m = gwi::mean_and_se(ends);
    const auto v = gwi::variance_and_se(ends);
    CHECK(std::abs(m.mean - c.mean) <= 5.0 * m.se);
    CHECK(std::abs(v.variance - c.var) <= 5.0 * v.se);
    for (double x : ends) CHECK(x >= 0.0);
    const auto ks = gwi::ks_distance(ends, [&](double x) { return gwi::limit_marginal_cdf(c.p, 1.0, x); });
    CHECK(ks.p_value > 0.001);
  }
}

TEST_CASE("exact transitions: paths are nonnegative") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    RandomStream s(8, i, gwi::kDiffusionSlot);
    const auto path = gwi::exact_transition_path({0.2, 3.0, 0.0}, 2.0, 200, s);
    for (double v : path.values) CHECK(v >= 0.0);
    CHECK(path.scheme == gwi::Scheme::exact_transition);
  }
}

TEST_CASE("exact transitions: one step equals two half steps in law") {
  const SDEParams p{1.0, 1.0, 0.0};
  const double x = 0.7;
  const double h = 0.5;
  const int reps = 100000;
  std::vector<double> one(reps);
  std::vector<double> two(reps);
  for (int i = 0; i < reps; ++i) {
    RandomStream a(21, i, 1);
    RandomStream b(21, i, 2);
    one[i] = gwi::exact_transition_step(p, x, h, a);
    two[i] = gwi::exact_transition_step(p, gwi::exact_transition_step(p, x, h / 2, b), h / 2, b);
  }
  CHECK(gwi::ks_two_sample(one, two).p_value > 0.001);

  // From zero the noncentral law is the central one: X_h ~ Gamma(2m/sigma2, sigma2 h / 2).
  std::vector<double> from_zero(reps);
  for (int i = 0; i < reps; ++i) {
    RandomStream c(22, i, 0);
    from_zero[i] = gwi::exact_transition_step(p, 0.0, h, c);
  }
  const auto ks = gwi::ks_distance(from_zero, [&](double y) { return gwi::limit_marginal_cdf(p, h, y); });
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("Euler and exact endpoints agree at moderate resolution") {
  const SDEParams p{1.0, 1.0, 0.0};
  const auto euler = gwi::euler_endpoints(p, 1.0, 256, 20000, 4, 1);
  const auto exact = gwi::exact_endpoints(p, 1.0, 1, 20000, 4, 1);
  CHECK(gwi::ks_two_sample(euler, exact).p_value > 0.001);
}

TEST_CASE("endpoints do not depend on the thread count") {
  const SDEParams p{1.0, 1.0, 0.0};
  CHECK(gwi::euler_endpoints(p, 1.0, 64, 300, 9, 1) == gwi::euler_endpoints(p, 1.0, 64, 300, 9, 3));
  CHECK(gwi::exact_endpoints(p, 1.0, 8, 300, 9, 1) == gwi::exact_endpoints(p, 1.0, 8, 300, 9, 4));
}

TEST_CASE("limit marginal CDF") {
  const SDEParams exp1{1.0, 2.0, 0.0};
  CHECK(gwi::limit_marginal_cdf(exp1, 1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));
  CHECK(gwi::limit_marginal_cdf(exp1, 1.0, 0.0) == 0.0);
  CHECK(gwi::limit_marginal_cdf(exp1, 1.0, -2.0) == 0.0);
  CHECK(gwi::limit_marginal_cdf(exp1, 1.0, 1e3) == 1.0);

  // Gamma(2, scale 1/2): 1 - e^{-2x} (1 + 2x).
  const SDEParams g2{1.0, 1.0, 0.0};
  for (double x : {0.1, 0.5, 1.0, 2.0, 4.0}) {
    CHECK(std::abs(gwi::limit_marginal_cdf(g2, 1.0, x) - (1.0 - std::exp(-2.0 * x) * (1.0 + 2.0 * x))) <= 1e-12);
  }

  for (double m : {0.05, 0.5, 1.0, 3.0}) {
    for (double s2 : {0.25, 1.0, 4.0}) {
      for (double t : {0.3, 1.0, 2.0}) {
        for (double x : {1e-4, 0.01, 0.2, 1.0, 3.0, 10.0}) {
          const double shape = 2.0 * m / s2;
          const double scale = s2 * t / 2.0;
          CHECK(std::abs(gwi::limit_marginal_cdf({m, s2, 0.0}, t, x) - gamma_p_series(shape, x / scale)) <= 1e-10);
        }
      }
    }
  }

  // No diffusion: a unit step at m t.
  const SDEParams line{2.0, 0.0, 0.0};
  CHECK(gwi::limit_marginal_cdf(line, 0.5, 0.999) == 0.0);
  CHECK(gwi::limit_marginal_cdf(line, 0.5, 1.0) == 1.0);

  CHECK_THROWS(gwi::limit_marginal_cdf({1.0, 1.0, 0.5}, 1.0, 1.0));
  CHECK_THROWS(gwi::limit_marginal_cdf(exp1, 0.0, 1.0));
}

TEST_CASE("martingale paths from population paths") {
  const SDEParams p{1.5, 0.0, 0.0};
  const auto line = gwi::deterministic_path(p, 2.0, 8);
  for (double v : gwi::m_path_from_x(line, 1.5).values) CHECK(std::abs(v) <= 1e-15);

  RandomStream s(2, 2, 2);
  const auto x = gwi::exact_transition_path({1.0, 1.0, 0.0}, 1.0, 50, s);
  const auto m = gwi::m_path_from_x(x, 1.0);
  CHECK(m.values[0] == 0.0);
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double t = x.times[i];
    const auto back = gwi::psi_limit([&](double) { return m.values[i]; }, 1.0);
    CHECK(back(t) == doctest::Approx(x.values[i]).epsilon(1e-14));
  }
}

TEST_CASE("CSV export") {
  const auto line = gwi::deterministic_path({1.0, 0.0, 0.0}, 1.0, 2);
  std::ostringstream out;
  line.write_csv(out);
  CHECK(out.str() == "t,value\n0,0\n0.5,0.5\n1,1\n");
  std::ostringstream ends;
  gwi::write_endpoints_csv(ends, {0.25, 3.0});
  CHECK(ends.str() == "value\n0.25\n3\n");
  CHECK(gwi::scheme_name(gwi::Scheme::exact_transition) == "exact_transition");
}
