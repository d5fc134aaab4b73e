#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "gwi/gw_engine.hpp"

namespace gwi {

struct MomentParams {
  double m_xi = 1.0;
  double m_eps = 0.0;
  double sigma2_xi = 0.0;
  double sigma2_eps = 0.0;
  double mean_x0 = 0.0;
  double var_x0 = 0.0;

  void validate() const;
  bool critical() const { return m_xi == 1.0; }
};

MomentParams moment_params(const GWConfig& config);

/// E X_k for any offspring mean. Falls back to E X_0 + m_eps k when |m_xi - 1| < 1e-12.
double mean_xk(const MomentParams& p, std::uint64_t k);

/// Var X_k in the critical case.
double var_xk_critical(const MomentParams& p, std::uint64_t k);

/// Var(X_k | X_{k-1} = x_prev) = E(M_k^2 | X_{k-1} = x_prev).
double cond_var_given_prev(const MomentParams& p, double x_prev);

/// E M_k^2 in the critical case, k >= 1.
double second_moment_mk(const MomentParams& p, std::uint64_t k);

struct MomentTable {
  std::vector<std::uint64_t> k_values;
  std::vector<double> mean_x;
  std::vector<double> var_x;    // NaN when not critical
  std::vector<double> mean_m2;  // NaN when not critical
};

MomentTable moment_table(const MomentParams& p, std::uint64_t k_max);

/// CSV columns k,mean_x,var_x,mean_m2; undefined entries are left empty.
void write_moment_csv(std::ostream& out, const MomentTable& table);

struct OrderRow {
  std::uint64_t k;
  double mean_over_k;         // E X_k / k
  double second_over_k2;      // E X_k^2 / k^2
  double abs_m_bound_over_sqrt_k;  // sqrt(E M_k^2) / sqrt(k), the Lyapunov bound on E|M_k|
  double m2_over_k;           // E M_k^2 / k
};

/// Ratio sequences whose boundedness in k certifies the asymptotic orders of
/// E X_k, E X_k^2, E|M_k| and E M_k^2. Critical parameters only.
std::vector<OrderRow> order_certificates(const MomentParams& p, std::uint64_t k_max);

}  // namespace gwi
