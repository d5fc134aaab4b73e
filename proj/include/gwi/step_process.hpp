#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "gwi/gw_engine.hpp"

namespace gwi {

/*
 * Cadlag step function on [0, T] over the grid of mesh 1/n: the value on
 * [k/n, (k+1)/n) is values[k], so evaluation at t reads values[floor(n t)].
 */
class StepFunction {
 public:
  StepFunction(std::uint64_t n, double horizon, std::vector<double> values);

  std::uint64_t n() const { return n_; }
  double horizon() const { return horizon_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double t) const;

  /// CSV columns k,t_left,value.
  void write_csv(std::ostream& out) const;

 private:
  std::uint64_t n_;
  double horizon_;
  std::vector<double> values_;
};

/// floor(n t) computed without the rounding slip of n * t for grid-aligned t.
std::uint64_t grid_index(std::uint64_t n, double t);

/// The scaled martingale step process (X_0 + sum_{k<=floor(nt)} M_k) / n.
StepFunction build_mn(const GWPath& path, std::uint64_t n, double m_eps, double horizon);

/// The scaled population step process X_{floor(nt)} / n.
StepFunction build_xn(const GWPath& path, std::uint64_t n, double horizon);

/// Integral over [0, t] of (M^(n)_s + m_eps s)^+ ds in closed form.
double shifted_integral(const GWPath& path, std::uint64_t n, double m_eps, double t);

/// (psi_n f)(t) = f(floor(nt)/n) + floor(nt)/n * m_eps on the n-grid of [0, T].
StepFunction psi_n(const std::function<double(double)>& f, std::uint64_t n, double m_eps, double horizon);
StepFunction psi_n(const StepFunction& f, double m_eps);

/// (psi f)(t) = f(t) + m_eps t.
std::function<double(double)> psi_limit(std::function<double(double)> f, double m_eps);

}  // namespace gwi
