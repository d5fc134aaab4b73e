#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gwi/diffusion.hpp"
#include "gwi/gw_engine.hpp"
#include "gwi/moments.hpp"
#include "gwi/statistics.hpp"
#include "json.hpp"

namespace gwi {

// ---------------------------------------------------------------------------
// Pathwise condition statistics
// ---------------------------------------------------------------------------

/// Residual n^-2 sum_{k<=floor(nt)} E(M_k^2 | X_{k-1}) - sigma2 * integral, in the
/// reduced form it takes for a GW path. `cell` = floor(nt), `frac` = nt - floor(nt).
double cond1_residual(const GWPath& path, std::uint64_t n, const MomentParams& p, std::uint64_t cell, double frac);

/// Exact sup over t in [0, T] of |cond1 residual|. The residual is quadratic in
/// t on each grid cell, so each cell is maximized at its ends or its vertex.
double cond1_sup_statistic(const GWPath& path, std::uint64_t n, const MomentParams& p, double horizon);

/// n^-2 sum_{k<=floor(nT)} M_k^2 1{|M_k| > n theta} for one path.
double lindeberg_sum(const GWPath& path, std::uint64_t n, double theta, double m_eps, double horizon);

/// Monte Carlo mean (with standard error) of lindeberg_sum over an ensemble.
MeanSe cond2_lindeberg_statistic(const PathEnsemble& ensemble, std::uint64_t n, double theta, double m_eps,
                                 double horizon, unsigned threads);

/// n^-2 max_{k<=floor(nT)} X_k.
double cond11_supx_statistic(const GWPath& path, std::uint64_t n, double horizon);

/// sup over t in [0, T] of |X_{floor(nt)}/n - m_eps t|, left limits included.
double line_deviation_sup(const GWPath& path, std::uint64_t n, double m_eps, double horizon);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class Comparison { less, less_equal, greater_equal };

struct Verdict {
  std::string test;
  double statistic = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::less;
  bool pass = false;
  double runtime_ms = 0.0;
};

Verdict make_verdict(std::string test, double statistic, Comparison cmp, double tolerance, double runtime_ms = 0.0);

enum class ConditionKind { cond1_sup, cond2_lindeberg, cond11_supx };

struct ConditionTrace {
  ConditionKind kind = ConditionKind::cond1_sup;
  std::vector<std::uint64_t> n_values;
  std::vector<double> estimates;
  std::vector<double> standard_errors;
  double theta = 0.0;  // cond2 only
  double horizon = 1.0;
  std::uint64_t n_paths = 0;
};

struct Diagnostic {
  std::string name;
  double value = 0.0;
};

struct TestReport {
  std::string scenario;
  std::string version;
  std::uint64_t seed = 0;
  std::vector<Verdict> verdicts;
  std::vector<ConditionTrace> traces;
  std::vector<Diagnostic> diagnostics;
  double simulation_ms = 0.0;

  bool all_pass() const;

  /// Runtimes are wall-clock and therefore only emitted when asked for;
  /// without them the document is a pure function of scenario and seed.
  nlohmann::json to_json(bool include_timings = false) const;
  static TestReport from_json(const nlohmann::json& j);

  /// Fixed-width human-readable table; the runtime column only with timings.
  std::string table(bool include_timings = false) const;
};

std::string build_version();

// ---------------------------------------------------------------------------
// Verification runs
// ---------------------------------------------------------------------------

struct Tolerances {
  double fdd_ks = 0.02;
  double centered_ks = 0.02;
  double fdd_monotone_se = 2.0;
  double cond1_decay = 10.0;
  double cond2_final = 1e-3;
  double cond11_decay = 3.0;
  double condition_monotone_se = 3.0;
  double moment_z = 5.0;
  double identity = 1e-9;
  double line_gap = 0.05;
  double line_fraction = 0.99;

  nlohmann::json to_json() const;
  static Tolerances from_json(const nlohmann::json& j);
};

struct VerificationPlan {
  std::string name = "unnamed";
  GWConfig config;
  SDEParams sde;  // limit coefficients: m_eps, sigma2_xi; x0 is 0
  std::vector<std::uint64_t> n_ladder{10, 50, 100, 500, 1000};
  std::vector<double> t_values{1.0};
  double horizon = 1.0;  // T for the condition statistics
  std::vector<double> theta_values{0.5};
  std::uint64_t n_paths = 100000;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> moment_k{1, 10, 50};
  std::uint64_t identity_paths = 1000;
  std::uint64_t diagnostic_steps = 256;
  Tolerances tolerances;
  unsigned threads = 1;

  /// Generations the shared ensemble needs: floor(n_max * max(T, max t)).
  std::uint64_t required_horizon() const;
  void validate() const;
};

/// Per-(n, t) KS statistics of the fdd comparison.
struct FddCell {
  std::uint64_t n = 0;
  double t = 0.0;
  KSResult ks;
  KSResult centered_ks;
};

struct ConvergenceRun {
  TestReport report;
  std::vector<FddCell> fdd;
};

/*
 * Finite-dimensional weak-convergence check: for every n and t, draws n_paths
 * values of X_{floor(nt)}/n and compares them with the limit marginal (and the
 * centered sample with the shifted limit). With sigma2_xi = 0 the comparison is
 * with the line m_eps t instead.
 */
TestReport fdd_convergence_test(const GWConfig& config, const std::vector<double>& t_values,
                                const std::vector<std::uint64_t>& n_values, std::uint64_t n_paths,
                                std::uint64_t seed, unsigned threads, const Tolerances& tolerances = {});

/// Full verification: identities, moment match, fdd, centered, condition decay,
/// and the degenerate-line check, all from one shared ensemble pass.
ConvergenceRun run_convergence_suite(const VerificationPlan& plan);

/// Runs the suite restricted to the fdd family; shared with fdd_convergence_test.
ConvergenceRun run_fdd_only(const VerificationPlan& plan);

}  // namespace gwi
