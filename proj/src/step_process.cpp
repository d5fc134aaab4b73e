#include "gwi/step_process.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gwi {

namespace {

void require_horizon(const GWPath& path, std::uint64_t n, double horizon, const char* what) {
  if (n == 0) throw std::invalid_argument(std::string(what) + ": n must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument(std::string(what) + ": horizon must be nonnegative");
  const std::uint64_t last = grid_index(n, horizon);
  if (last > path.horizon()) {
    throw std::invalid_argument(std::string(what) + ": path has K = " + std::to_string(path.horizon()) +
                                " generations but floor(nT) = " + std::to_string(last));
  }
}

}  // namespace

std::uint64_t grid_index(std::uint64_t n, double t) {
  if (t < 0.0) throw std::domain_error("grid_index: t must be nonnegative");
  const double scaled = static_cast<double>(n) * t;
  auto k = static_cast<std::uint64_t>(std::floor(scaled));
  // Guard against n*t landing one ulp below an integer that t/n represents exactly.
  if (static_cast<double>(k + 1) / static_cast<double>(n) <= t) ++k;
  return k;
}

StepFunction::StepFunction(std::uint64_t n, double horizon, std::vector<double> values)
    : n_(n), horizon_(horizon), values_(std::move(values)) {
  if (n_ == 0) throw std::invalid_argument("StepFunction: n must be positive");
  if (values_.size() < grid_index(n_, horizon_) + 1) {
    throw std::invalid_argument("StepFunction: need floor(nT) + 1 values");
  }
}

double StepFunction::operator()(double t) const {
  if (t < 0.0 || t > horizon_) throw std::domain_error("StepFunction: t outside [0, T]");
  return values_[grid_index(n_, t)];
}

void StepFunction::write_csv(std::ostream& out) const {
  out << "k,t_left,value\n";
  char buf[64];
  for (std::size_t k = 0; k < values_.size(); ++k) {
    out << k << ',';
    auto r = std::to_chars(buf, buf + sizeof buf, static_cast<double>(k) / static_cast<double>(n_));
    out.write(buf, r.ptr - buf);
    out << ',';
    r = std::to_chars(buf, buf + sizeof buf, values_[k]);
    out.write(buf, r.ptr - buf);
    out << '\n';
  }
}

StepFunction build_mn(const GWPath& path, std::uint64_t n, double m_eps, double horizon) {
  require_horizon(path, n, horizon, "build_mn");
  const std::uint64_t last = grid_index(n, horizon);
  const double nn = static_cast<double>(n);
  std::vector<double> values(last + 1);
  double partial = static_cast<double>(path.x[0]);  // X_0 + sum of M_j
  for (std::uint64_t k = 0; k <= last; ++k) {
    if (k > 0) {
      partial += static_cast<double>(path.x[k]) - static_cast<double>(path.x[k - 1]) - m_eps;
    }
    const double closed = static_cast<double>(path.x[k]) / nn - static_cast<double>(k) * m_eps / nn;
    const double summed = partial / nn;
    if (std::abs(closed - summed) > 1e-9 * std::max(1.0, std::abs(closed))) {
      throw std::logic_error("build_mn: summed and closed forms disagree at k = " + std::to_string(k));
    }
    values[k] = closed;
  }
  return StepFunction(n, horizon, std::move(values));
}

StepFunction build_xn(const GWPath& path, std::uint64_t n, double horizon) {
  require_horizon(path, n, horizon, "build_xn");
  const std::uint64_t last = grid_index(n, horizon);
  std::vector<double> values(last + 1);
  for (std::uint64_t k = 0; k <= last; ++k) values[k] = static_cast<double>(path.x[k]) / static_cast<double>(n);
  return StepFunction(n, horizon, std::move(values));
}

double shifted_integral(const GWPath& path, std::uint64_t n, double m_eps, double t) {
  if (t < 0.0) throw std::domain_error("shifted_integral: t must be nonnegative");
  require_horizon(path, n, t, "shifted_integral");
  const std::uint64_t cell = grid_index(n, t);
  const double nn = static_cast<double>(n);
  const double frac = std::max(0.0, nn * t - static_cast<double>(cell));  // nt - floor(nt)
  double sum = 0.0;
  for (std::uint64_t k = 0; k < cell; ++k) sum += static_cast<double>(path.x[k]);
  const double n2 = nn * nn;
  return sum / n2 + frac / n2 * static_cast<double>(path.x[cell]) +
         (static_cast<double>(cell) + frac * frac) / (2.0 * n2) * m_eps;
}

StepFunction psi_n(const std::function<double(double)>& f, std::uint64_t n, double m_eps, double horizon) {
  if (n == 0) throw std::invalid_argument("psi_n: n must be positive");
  const std::uint64_t last = grid_index(n, horizon);
  const double nn = static_cast<double>(n);
  std::vector<double> values(last + 1);
  for (std::uint64_t k = 0; k <= last; ++k) {
    const double left = static_cast<double>(k) / nn;
    values[k] = f(left) + left * m_eps;
  }
  return StepFunction(n, horizon, std::move(values));
}

StepFunction psi_n(const StepFunction& f, double m_eps) {
  const double nn = static_cast<double>(f.n());
  std::vector<double> values(f.values().size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = f.values()[k] + static_cast<double>(k) * m_eps / nn;
  }
  return StepFunction(f.n(), f.horizon(), std::move(values));
}

std::function<double(double)> psi_limit(std::function<double(double)> f, double m_eps) {
  return [f = std::move(f), m_eps](double t) { return f(t) + m_eps * t; };
}

}  // namespace gwi
