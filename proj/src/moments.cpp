#include "gwi/moments.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gwi {

namespace {

constexpr double kCriticalBranchThreshold = 1e-12;

void require_critical(const MomentParams& p, const char* what) {
  if (!p.critical()) throw std::domain_error(std::string(what) + ": offspring mean must equal 1");
}

}  // namespace

void MomentParams::validate() const {
  for (double v : {m_xi, m_eps, sigma2_xi, sigma2_eps, mean_x0, var_x0}) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("moment parameters must be finite and nonnegative");
  }
}

MomentParams moment_params(const GWConfig& c) {
  MomentParams p;
  // An exactly critical law reports m_xi = 1 even for tabulated laws whose
  // floating mean is off by an ulp.
  p.m_xi = c.offspring.has_unit_mean() ? 1.0 : c.offspring.mean();
  p.m_eps = c.immigration.mean();
  p.sigma2_xi = c.offspring.variance();
  p.sigma2_eps = c.immigration.variance();
  p.mean_x0 = c.initial.mean();
  p.var_x0 = c.initial.variance();
  return p;
}

double mean_xk(const MomentParams& p, std::uint64_t k) {
  const double kk = static_cast<double>(k);
  if (std::abs(p.m_xi - 1.0) < kCriticalBranchThreshold) return p.mean_x0 + p.m_eps * kk;
  const double growth = std::pow(p.m_xi, kk);
  return p.mean_x0 * growth + p.m_eps * (growth - 1.0) / (p.m_xi - 1.0);
}

double var_xk_critical(const MomentParams& p, std::uint64_t k) {
  require_critical(p, "var_xk_critical");
  const double kk = static_cast<double>(k);
  return p.m_eps * p.sigma2_xi * (kk - 1.0) * kk / 2.0 + (p.sigma2_xi * p.mean_x0 + p.sigma2_eps) * kk + p.var_x0;
}

double cond_var_given_prev(const MomentParams& p, double x_prev) {
  return p.sigma2_xi * x_prev + p.sigma2_eps;
}

double second_moment_mk(const MomentParams& p, std::uint64_t k) {
  require_critical(p, "second_moment_mk");
  if (k == 0) throw std::domain_error("second_moment_mk: M_0 is undefined");
  const double kk = static_cast<double>(k);
  return p.sigma2_xi * p.m_eps * (kk - 1.0) + p.sigma2_xi * p.mean_x0 + p.sigma2_eps;
}

MomentTable moment_table(const MomentParams& p, std::uint64_t k_max) {
  MomentTable t;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::uint64_t k = 1; k <= k_max; ++k) {
    t.k_values.push_back(k);
    t.mean_x.push_back(mean_xk(p, k));
    t.var_x.push_back(p.critical() ? var_xk_critical(p, k) : nan);
    t.mean_m2.push_back(p.critical() ? second_moment_mk(p, k) : nan);
  }
  return t;
}

void write_moment_csv(std::ostream& out, const MomentTable& t) {
  out << "k,mean_x,var_x,mean_m2\n";
  char buf[64];
  auto put = [&](double v) {
    if (std::isnan(v)) return;
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
  };
  for (std::size_t i = 0; i < t.k_values.size(); ++i) {
    out << t.k_values[i] << ',';
    put(t.mean_x[i]);
    out << ',';
    put(t.var_x[i]);
    out << ',';
    put(t.mean_m2[i]);
    out << '\n';
  }
}

std::vector<OrderRow> order_certificates(const MomentParams& p, std::uint64_t k_max) {
  require_critical(p, "order_certificates");
  if (k_max < 2) throw std::domain_error("order_certificates: k_max must be at least 2");
  std::vector<OrderRow> rows;
  rows.reserve(k_max);
  for (std::uint64_t k = 1; k <= k_max; ++k) {
    const double kk = static_cast<double>(k);
    const double mean = mean_xk(p, k);
    const double second = var_xk_critical(p, k) + mean * mean;
    const double m2 = second_moment_mk(p, k);
    rows.push_back({k, mean / kk, second / (kk * kk), std::sqrt(m2) / std::sqrt(kk), m2 / kk});
  }
  return rows;
}

}  // namespace gwi
