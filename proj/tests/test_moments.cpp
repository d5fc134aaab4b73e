#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "gwi/moments.hpp"

using gwi::MomentParams;

namespace {

MomentParams poisson_params() {
  MomentParams p;
  p.m_xi = 1.0;
  p.m_eps = 1.0;
  p.sigma2_xi = 1.0;
  p.sigma2_eps = 1.0;
  return p;
}

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("mean examples") {
  MomentParams p;
  p.m_xi = 2.0;
  p.mean_x0 = 1.0;
  p.m_eps = 1.0;
  CHECK(gwi::mean_xk(p, 2) == doctest::Approx(7.0));
  CHECK(gwi::mean_xk(p, 0) == 1.0);

  auto c = poisson_params();
  CHECK(gwi::mean_xk(c, 5) == 5.0);
  c.mean_x0 = 2.5;
  CHECK(gwi::mean_xk(c, 0) == 2.5);
}

TEST_CASE("variance examples") {
  auto p = poisson_params();
  CHECK(gwi::var_xk_critical(p, 3) == doctest::Approx(6.0));
  p.var_x0 = 4.0;
  CHECK(gwi::var_xk_critical(p, 0) == 4.0);

  p.sigma2_xi = 0.0;
  p.sigma2_eps = 0.7;
  for (std::uint64_t k : {1u, 7u, 300u}) CHECK(gwi::var_xk_critical(p, k) == doctest::Approx(0.7 * k + 4.0));

  p.m_xi = 0.5;
  CHECK_THROWS_AS(gwi::var_xk_critical(p, 2), std::domain_error);
  CHECK_THROWS_AS(gwi::second_moment_mk(p, 2), std::domain_error);
  CHECK_THROWS_AS(gwi::order_certificates(p, 10), std::domain_error);
}

TEST_CASE("conditional variance examples") {
  auto p = poisson_params();
  CHECK(gwi::cond_var_given_prev(p, 0) == 1.0);
  CHECK(gwi::cond_var_given_prev(p, 10) == 11.0);
  p.sigma2_xi = 0.0;
  p.sigma2_eps = 2.0;
  for (double x : {0.0, 1.0, 1e6}) CHECK(gwi::cond_var_given_prev(p, x) == 2.0);
}

TEST_CASE("second moment of the martingale differences") {
  auto p = poisson_params();
  CHECK(gwi::second_moment_mk(p, 1) == 1.0);
  CHECK(gwi::second_moment_mk(p, 4) == doctest::Approx(4.0));
  CHECK_THROWS_AS(gwi::second_moment_mk(p, 0), std::domain_error);
  p.sigma2_eps = 0.3;
  CHECK(gwi::second_moment_mk(p, 1) == doctest::Approx(0.3));
}

TEST_CASE("property: closed forms satisfy the one-step recursions up to k = 1000") {
  // Oracle: iterate E X_k = m E X_{k-1} + m_eps and, in the critical case,
  // Var X_k = Var X_{k-1} + sigma2 E X_{k-1} + sigma2_eps, and
  // E M_k^2 = E Var(X_k | X_{k-1}) = sigma2 E X_{k-1} + sigma2_eps.
  const MomentParams cases[] = {
      poisson_params(),
      {1.0, 2.5, 0.3, 4.0, 7.0, 2.0},
      {1.0, 0.0, 2.0, 0.0, 10.0, 1.0},
      {1.0, 3.0, 0.0, 1.5, 0.0, 0.0},
  };
  for (const auto& p : cases) {
    double mean = p.mean_x0;
    double var = p.var_x0;
    for (std::uint64_t k = 1; k <= 1000; ++k) {
      const double m2 = p.sigma2_xi * mean + p.sigma2_eps;
      var += m2;
      mean = p.m_xi * mean + p.m_eps;
      CHECK(close_rel(gwi::mean_xk(p, k), mean, 1e-9));
      CHECK(close_rel(gwi::var_xk_critical(p, k), var, 1e-9));
      CHECK(close_rel(gwi::second_moment_mk(p, k), m2, 1e-9));
    }
  }

  for (double m : {0.5, 0.9, 1.05, 2.0}) {
    const MomentParams p{m, 1.5, 1.0, 1.0, 3.0, 0.0};
    double mean = p.mean_x0;
    for (std::uint64_t k = 1; k <= 1000; ++k) {
      mean = m * mean + p.m_eps;
      if (!std::isfinite(mean)) break;
      CHECK(close_rel(gwi::mean_xk(p, k), mean, 1e-9));
    }
  }
}

TEST_CASE("the mean is continuous across the unit offspring mean") {
  MomentParams p{1.0, 2.0, 1.0, 1.0, 5.0, 0.0};
  const double linear = gwi::mean_xk(p, 100);
  for (double d : {-1e-6, -1e-9, -1e-11, -5e-13, 5e-13, 1e-11, 1e-9, 1e-6}) {
    p.m_xi = 1.0 + d;
    // First-order sensitivity in d is about k^2 (E X_0 + m_eps k / 3) / 2, far below 1 here.
    CHECK(std::abs(gwi::mean_xk(p, 100) - linear) <= 1e6 * std::abs(d) + 1e-9);
  }
}

TEST_CASE("moment table and CSV") {
  const auto t = gwi::moment_table(poisson_params(), 3);
  CHECK(t.k_values == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(t.mean_x == std::vector<double>{1, 2, 3});
  CHECK(t.var_x == std::vector<double>{1, 3, 6});
  CHECK(t.mean_m2 == std::vector<double>{1, 2, 3});
  std::ostringstream out;
  gwi::write_moment_csv(out, t);
  CHECK(out.str() == "k,mean_x,var_x,mean_m2\n1,1,1,1\n2,2,3,2\n3,3,6,3\n");

  const auto sub = gwi::moment_table({0.5, 1.0, 1.0, 1.0, 0.0, 0.0}, 2);
  CHECK(std::isnan(sub.var_x[0]));
  std::ostringstream out2;
  gwi::write_moment_csv(out2, sub);
  CHECK(out2.str() == "k,mean_x,var_x,mean_m2\n1,1,,\n2,1.5,,\n");
}

TEST_CASE("order certificates stay bounded") {
  // Max over k <= 1e4 of every ratio column, from the closed forms: E X_k^2 / k^2
  // peaks at k = 1 with (Var X_1 + 1) / 1 = 2; the other columns are identically 1.
  const auto rows = gwi::order_certificates(poisson_params(), 10000);
  REQUIRE(rows.size() == 10000);
  double worst = 0.0;
  for (const auto& r : rows) {
    worst = std::max({worst, r.mean_over_k, r.second_over_k2, r.abs_m_bound_over_sqrt_k, r.m2_over_k});
    CHECK(std::isfinite(r.m2_over_k));
  }
  CHECK(worst == doctest::Approx(2.0));
  CHECK(worst <= 3.0);
  CHECK(rows[0].mean_over_k > 0.0);
  CHECK(rows[0].m2_over_k > 0.0);

  auto flat = poisson_params();
  flat.sigma2_xi = 0.0;
  const auto line = gwi::order_certificates(flat, 10000);
  CHECK(line.back().m2_over_k == doctest::Approx(1e-4));
  CHECK(line.back().m2_over_k < line[99].m2_over_k);

  CHECK_THROWS_AS(gwi::order_certificates(poisson_params(), 1), std::domain_error);
}

TEST_CASE("parameters from a configuration") {
  gwi::GWConfig c;
  c.offspring = gwi::Distribution::two_point(0, 2, 0.5);
  c.immigration = gwi::Distribution::geometric(0.25);
  c.initial = gwi::Distribution::poisson(3.0);
  const auto p = gwi::moment_params(c);
  CHECK(p.critical());
  CHECK(p.sigma2_xi == 1.0);
  CHECK(p.m_eps == 3.0);
  CHECK(p.sigma2_eps == 12.0);
  CHECK(p.mean_x0 == 3.0);
  CHECK(p.var_x0 == 3.0);

  MomentParams bad = poisson_params();
  bad.sigma2_eps = -1.0;
  CHECK_THROWS(bad.validate());
}
