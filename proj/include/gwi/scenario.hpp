#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwi/convergence.hpp"
#include "json.hpp"

namespace gwi {

/// Scenario load/validation failure; the message names the line or field at fault.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kScenarioSchema = 1;

struct Scenario {
  std::string name;
  GWConfig gw;
  SDEParams sde;  // derived from gw when the file omits it
  std::vector<std::uint64_t> n_ladder{10, 50, 100, 500, 1000};
  std::vector<double> t_values{1.0};
  double horizon = 1.0;
  std::vector<double> theta_values{0.5};
  std::uint64_t n_paths = 100000;
  std::uint64_t master_seed = 1;
  std::vector<std::uint64_t> moment_k{1, 10, 50};
  std::uint64_t sde_steps = 2048;
  std::uint64_t sde_paths = 0;  // 0: same as n_paths
  Tolerances tolerances;
  std::string output_dir = "out";

  VerificationPlan plan(unsigned threads) const;
};

/// Parses scenario text; syntax errors report line and column.
nlohmann::json parse_scenario_text(const std::string& text);

/// Applies "dotted.path=value". The value is read as JSON when it parses,
/// otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Builds and validates a Scenario; errors name the offending field.
Scenario scenario_from_json(const nlohmann::json& doc);

/*
 * File -> GWI_SEED (if `seed_env` is set) -> overrides in order (last wins) ->
 * validation.
 */
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides,
                       const std::optional<std::string>& seed_env);

}  // namespace gwi
