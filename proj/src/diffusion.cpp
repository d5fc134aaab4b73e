#include "gwi/diffusion.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "gwi/parallel.hpp"

namespace gwi {

namespace {

void put_double(std::ostream& out, double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, r.ptr - buf);
}

std::vector<double> uniform_grid(double horizon, std::uint64_t steps) {
  std::vector<double> t(steps + 1);
  const double h = horizon / static_cast<double>(steps);
  for (std::uint64_t i = 0; i <= steps; ++i) t[i] = h * static_cast<double>(i);
  t[steps] = horizon;
  return t;
}

void check_grid(double horizon, std::uint64_t steps) {
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
}

}  // namespace

void SDEParams::validate() const {
  if (!(m_eps >= 0.0) || !std::isfinite(m_eps)) throw std::invalid_argument("m_eps must be finite and nonnegative");
  if (!(sigma2_xi >= 0.0) || !std::isfinite(sigma2_xi)) {
    throw std::invalid_argument("sigma2_xi must be finite and nonnegative");
  }
  if (!std::isfinite(x0)) throw std::invalid_argument("x0 must be finite");
}

std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::euler_full_truncation: return "euler_full_truncation";
    case Scheme::exact_transition: return "exact_transition";
    case Scheme::deterministic: return "deterministic";
  }
  return "unknown";
}

void DiffusionPath::write_csv(std::ostream& out) const {
  out << "t,value\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    put_double(out, times[i]);
    out << ',';
    put_double(out, values[i]);
    out << '\n';
  }
}

DiffusionPath euler_path(const SDEParams& p, double horizon, std::uint64_t steps, RandomStream& stream) {
  p.validate();
  check_grid(horizon, steps);
  if (p.sigma2_xi == 0.0) {
    auto path = deterministic_path(p, horizon, steps);
    path.scheme = Scheme::euler_full_truncation;
    return path;
  }
  DiffusionPath path;
  path.scheme = Scheme::euler_full_truncation;
  path.times = uniform_grid(horizon, steps);
  path.values.resize(steps + 1);
  const double h = horizon / static_cast<double>(steps);
  const double sqrt_h = std::sqrt(h);
  double x = p.x0;
  path.values[0] = x;
  for (std::uint64_t i = 0; i < steps; ++i) {
    const double z = standard_normal(stream);
    const double diffusion = x > 0.0 ? std::sqrt(p.sigma2_xi * x) : 0.0;
    x = x + p.m_eps * h + diffusion * sqrt_h * z;
    path.values[i + 1] = x;
  }
  return path;
}

double exact_transition_step(const SDEParams& p, double x, double h, RandomStream& stream) {
  if (p.sigma2_xi <= 0.0) {
    throw std::domain_error("exact transition needs sigma2_xi > 0; use the deterministic line or euler_path");
  }
  if (x < 0.0) throw std::domain_error("exact transition needs a nonnegative state");
  // X_{t+h} = c V with V noncentral chi-square(d, x / c):
  // N ~ Poisson(x / (2c)), V ~ Gamma(d/2 + N, scale 2).
  const double c = p.sigma2_xi * h / 4.0;
  const double half_dof = 2.0 * p.m_eps / p.sigma2_xi;
  const double half_noncentrality = x / (2.0 * c);
  double shape = half_dof;
  if (half_noncentrality > 0.0) {
    boost::random::poisson_distribution<std::int64_t, double> poisson(half_noncentrality);
    shape += static_cast<double>(poisson(stream));
  }
  if (shape <= 0.0) return 0.0;
  boost::random::gamma_distribution<double> gamma(shape, 2.0);
  return c * gamma(stream);
}

DiffusionPath exact_transition_path(const SDEParams& p, double horizon, std::uint64_t steps, RandomStream& stream) {
  p.validate();
  check_grid(horizon, steps);
  if (p.x0 < 0.0) throw std::domain_error("exact_transition_path: x0 must be nonnegative");
  if (p.sigma2_xi <= 0.0) {
    throw std::domain_error("exact_transition_path: sigma2_xi = 0 is the deterministic line; use euler_path");
  }
  DiffusionPath path;
  path.scheme = Scheme::exact_transition;
  path.times = uniform_grid(horizon, steps);
  path.values.resize(steps + 1);
  const double h = horizon / static_cast<double>(steps);
  double x = p.x0;
  path.values[0] = x;
  for (std::uint64_t i = 0; i < steps; ++i) {
    x = exact_transition_step(p, x, h, stream);
    path.values[i + 1] = x;
  }
  return path;
}

DiffusionPath deterministic_path(const SDEParams& p, double horizon, std::uint64_t steps) {
  check_grid(horizon, steps);
  DiffusionPath path;
  path.scheme = Scheme::deterministic;
  path.times = uniform_grid(horizon, steps);
  path.values.resize(steps + 1);
  for (std::uint64_t i = 0; i <= steps; ++i) path.values[i] = p.x0 + p.m_eps * path.times[i];
  return path;
}

double limit_marginal_cdf(const SDEParams& p, double t, double x) {
  if (p.x0 != 0.0) throw std::domain_error("limit_marginal_cdf: the limit starts from x0 = 0");
  if (!(t > 0.0)) throw std::domain_error("limit_marginal_cdf: t must be positive");
  if (x < 0.0) return 0.0;
  if (p.sigma2_xi == 0.0) return x >= p.m_eps * t ? 1.0 : 0.0;
  const double shape = 2.0 * p.m_eps / p.sigma2_xi;
  if (shape == 0.0) return 1.0;  // absorbed at zero
  const double scale = p.sigma2_xi * t / 2.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, x / scale);
}

DiffusionPath m_path_from_x(const DiffusionPath& xpath, double m_eps) {
  DiffusionPath out = xpath;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= m_eps * out.times[i];
  return out;
}

std::vector<double> euler_endpoints(const SDEParams& p, double horizon, std::uint64_t steps, std::uint64_t n_paths,
                                    std::uint64_t seed, unsigned threads) {
  std::vector<double> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RandomStream stream(seed, i, kDiffusionSlot);
    out[i] = euler_path(p, horizon, steps, stream).values.back();
  });
  return out;
}

std::vector<double> exact_endpoints(const SDEParams& p, double horizon, std::uint64_t steps, std::uint64_t n_paths,
                                    std::uint64_t seed, unsigned threads) {
  std::vector<double> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RandomStream stream(seed, i, kDiffusionSlot);
    out[i] = exact_transition_path(p, horizon, steps, stream).values.back();
  });
  return out;
}

void write_endpoints_csv(std::ostream& out, const std::vector<double>& values) {
  out << "value\n";
  for (double v : values) {
    put_double(out, v);
    out << '\n';
  }
}

}  // namespace gwi
