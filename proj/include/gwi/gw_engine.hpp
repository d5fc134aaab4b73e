#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "gwi/distributions.hpp"
#include "json.hpp"

namespace gwi {

struct GWConfig {
  Distribution offspring = Distribution::poisson(1.0);
  Distribution immigration = Distribution::poisson(1.0);
  Distribution initial = Distribution::point_mass(0);
  std::uint64_t horizon = 1;
  bool record_immigration = false;

  void validate() const;

  /// Offspring mean exactly one.
  bool is_critical() const { return offspring.has_unit_mean(); }

  nlohmann::json to_json() const;
  static GWConfig from_json(const nlohmann::json& j);

  /// FNV-1a over the canonical JSON form.
  std::uint64_t hash() const;
};

struct GWPath {
  std::vector<Count> x;                   // X_0 .. X_K
  std::optional<std::vector<Count>> eps;  // eps_1 .. eps_K, eps->at(k-1) is eps_k
  std::uint64_t path_index = 0;

  std::uint64_t horizon() const { return x.empty() ? 0 : x.size() - 1; }
};

/// Population overflow during simulation, with the generation (and path) where it happened.
class PopulationOverflow : public std::overflow_error {
 public:
  PopulationOverflow(std::uint64_t path_index, std::uint64_t generation, const std::string& detail);
  std::uint64_t path_index() const { return path_; }
  std::uint64_t generation() const { return generation_; }

 private:
  std::uint64_t path_;
  std::uint64_t generation_;
};

/// Simulates X_k = sum_{j <= X_{k-1}} xi_{k,j} + eps_k for k = 1..K.
/// X_0 is drawn from slot 0 of (master_seed, path_index); generation k uses slot k.
GWPath simulate_path(const GWConfig& config, std::uint64_t master_seed, std::uint64_t path_index);

/// M_k = X_k - X_{k-1} - m_eps for k = 1..K (index k-1 in the result).
std::vector<double> martingale_differences(const GWPath& path, double m_eps);

struct MkDecomposition {
  std::vector<double> offspring_part;     // N_k = (X_k - eps_k) - X_{k-1}
  std::vector<double> immigration_part;   // eps_k - m_eps
};

/// Splits M_k into its branching and immigration parts. Needs recorded immigration.
MkDecomposition decompose_mk(const GWPath& path, double m_eps);

/// Largest |X_k - (X_0 + sum_{j<=k} M_j + k m_eps)| along the path.
double reconstruction_error(const GWPath& path, double m_eps);

/*
 * A seeded family of paths. Path i is a pure function of (config, master_seed, i),
 * so paths can be produced lazily, regenerated one at a time, or materialized.
 */
class PathEnsemble {
 public:
  PathEnsemble(GWConfig config, std::uint64_t master_seed, std::uint64_t n_paths);

  const GWConfig& config() const { return config_; }
  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t size() const { return n_paths_; }

  /// Path i: the materialized copy if present, otherwise regenerated.
  GWPath path(std::uint64_t i) const;

  /// Simulates and stores every path.
  void materialize(unsigned threads);
  bool materialized() const { return !paths_.empty(); }
  const std::vector<GWPath>& paths() const { return paths_; }

  /// Visits every path on `threads` workers; the visitor must only write
  /// index-addressed state.
  void for_each(unsigned threads, const std::function<void(std::uint64_t, const GWPath&)>& visit) const;

 private:
  GWConfig config_;
  std::uint64_t seed_;
  std::uint64_t n_paths_;
  std::vector<GWPath> paths_;
};

PathEnsemble generate_ensemble(const GWConfig& config, std::uint64_t master_seed, std::uint64_t n_paths,
                               unsigned threads);

/// CSV with columns path_id,k,x_k[,eps_k],m_k. m_k is empty at k = 0.
void write_paths_csv(std::ostream& out, std::span<const GWPath> paths, double m_eps);

struct EnsembleHeader {
  std::uint32_t version = 1;
  std::uint64_t config_hash = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t n_paths = 0;
  std::uint64_t horizon = 0;
  bool has_immigration = false;
};

/*
 * Binary ensemble layout, all integers little-endian:
 *   "GWIENS\0\0" | u32 version | u32 flags (bit 0: eps present) |
 *   u64 config_hash | u64 master_seed | u64 n_paths | u64 K |
 *   per path: (K+1) x u64 X_k, then K x u64 eps_k if flagged.
 */
void write_ensemble_binary(std::ostream& out, const PathEnsemble& ensemble);

struct LoadedEnsemble {
  EnsembleHeader header;
  std::vector<GWPath> paths;
};

LoadedEnsemble read_ensemble_binary(std::istream& in);

}  // namespace gwi
