#pragma once

#include <cstdint>
#include <ostream>
#include <string_view>
#include <vector>

#include "gwi/random_stream.hpp"

namespace gwi {

/// Coefficients of dX = m_eps dt + sqrt(sigma2_xi X^+) dW, X_0 = x0.
struct SDEParams {
  double m_eps = 0.0;
  double sigma2_xi = 0.0;
  double x0 = 0.0;

  void validate() const;
};

enum class Scheme { euler_full_truncation, exact_transition, deterministic };

std::string_view scheme_name(Scheme s);

struct DiffusionPath {
  std::vector<double> times;
  std::vector<double> values;
  Scheme scheme = Scheme::euler_full_truncation;

  /// CSV columns t,value.
  void write_csv(std::ostream& out) const;
};

/*
 * Full-truncation Euler: X_{i+1} = X_i + m h + sqrt(sigma2 X_i^+) sqrt(h) Z_i.
 * Negative iterates are stored as they are; only the diffusion coefficient
 * sees the positive part.
 */
DiffusionPath euler_path(const SDEParams& p, double horizon, std::uint64_t steps, RandomStream& stream);

/// One exact step of size h from state x >= 0 (sigma2_xi > 0).
double exact_transition_step(const SDEParams& p, double x, double h, RandomStream& stream);

/// Path sampled with exact squared-Bessel transitions on a uniform grid.
DiffusionPath exact_transition_path(const SDEParams& p, double horizon, std::uint64_t steps, RandomStream& stream);

/// x0 + m_eps t on the same grid; the solution when sigma2_xi = 0.
DiffusionPath deterministic_path(const SDEParams& p, double horizon, std::uint64_t steps);

/// CDF at x of the time-t marginal started from 0:
/// Gamma(shape 2 m_eps / sigma2_xi, scale sigma2_xi t / 2).
double limit_marginal_cdf(const SDEParams& p, double t, double x);

/// Shifts values by -m_eps t pointwise (X-path to M-path).
DiffusionPath m_path_from_x(const DiffusionPath& xpath, double m_eps);

/// Endpoints at `horizon` of n_paths independent paths; path i uses stream (seed, i, kDiffusionSlot).
std::vector<double> euler_endpoints(const SDEParams& p, double horizon, std::uint64_t steps, std::uint64_t n_paths,
                                    std::uint64_t seed, unsigned threads);
std::vector<double> exact_endpoints(const SDEParams& p, double horizon, std::uint64_t steps, std::uint64_t n_paths,
                                    std::uint64_t seed, unsigned threads);

/// Single-column CSV (header "value").
void write_endpoints_csv(std::ostream& out, const std::vector<double>& values);

}  // namespace gwi
