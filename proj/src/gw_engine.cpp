#include "gwi/gw_engine.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <limits>
#include <cmath>
#include <cstring>
#include <string>

#include "gwi/parallel.hpp"

namespace gwi {

void GWConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon_K must be at least 1");
  if (horizon >= kDiffusionSlot) throw std::invalid_argument("horizon_K exceeds the substream slot range");
}

nlohmann::json GWConfig::to_json() const {
  return {{"offspring", offspring.to_json()},
          {"immigration", immigration.to_json()},
          {"initial", initial.to_json()},
          {"horizon_K", horizon},
          {"record_immigration", record_immigration}};
}

GWConfig GWConfig::from_json(const nlohmann::json& j) {
  GWConfig c;
  auto dist = [&](const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    try {
      return Distribution::from_json(j.at(key));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(key) + ": " + e.what());
    }
  };
  c.offspring = dist("offspring");
  c.immigration = dist("immigration");
  c.initial = j.contains("initial") ? dist("initial") : Distribution::point_mass(0);
  const bool count = j.contains("horizon_K") && (j.at("horizon_K").is_number_unsigned() ||
                                                 (j.at("horizon_K").is_number_integer() &&
                                                  j.at("horizon_K").get<std::int64_t>() >= 0));
  if (!count) {
    throw std::invalid_argument("horizon_K: must be a positive integer");
  }
  c.horizon = j.at("horizon_K").get<std::uint64_t>();
  if (j.contains("record_immigration")) {
    if (!j.at("record_immigration").is_boolean()) {
      throw std::invalid_argument("record_immigration: must be a boolean");
    }
    c.record_immigration = j.at("record_immigration").get<bool>();
  }
  c.validate();
  return c;
}

std::uint64_t GWConfig::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

PopulationOverflow::PopulationOverflow(std::uint64_t path_index, std::uint64_t generation,
                                       const std::string& detail)
    : std::overflow_error("population overflow in path " + std::to_string(path_index) + " at generation " +
                          std::to_string(generation) + ": " + detail),
      path_(path_index),
      generation_(generation) {}

GWPath simulate_path(const GWConfig& config, std::uint64_t master_seed, std::uint64_t path_index) {
  GWPath path;
  path.path_index = path_index;
  path.x.resize(config.horizon + 1);
  if (config.record_immigration) path.eps.emplace(config.horizon);

  RandomStream initial_stream(master_seed, path_index, 0);
  path.x[0] = config.initial.sample(initial_stream);

  for (std::uint64_t k = 1; k <= config.horizon; ++k) {
    RandomStream stream(master_seed, path_index, static_cast<std::uint32_t>(k));
    try {
      const Count offspring = config.offspring.sample_sum(path.x[k - 1], stream);
      const Count immigrants = config.immigration.sample(stream);
      if (offspring > std::numeric_limits<Count>::max() - immigrants) {
        throw CountOverflow("offspring plus immigrants exceed the count range");
      }
      path.x[k] = offspring + immigrants;
      if (path.eps) (*path.eps)[k - 1] = immigrants;
    } catch (const CountOverflow& e) {
      throw PopulationOverflow(path_index, k, e.what());
    }
  }
  return path;
}

std::vector<double> martingale_differences(const GWPath& path, double m_eps) {
  if (path.x.size() < 2) throw std::invalid_argument("martingale_differences: path needs at least two points");
  std::vector<double> m(path.x.size() - 1);
  for (std::size_t k = 1; k < path.x.size(); ++k) {
    // Integer difference first so large counts stay exact.
    const double dx = path.x[k] >= path.x[k - 1] ? static_cast<double>(path.x[k] - path.x[k - 1])
                                                 : -static_cast<double>(path.x[k - 1] - path.x[k]);
    m[k - 1] = dx - m_eps;
  }
  return m;
}

MkDecomposition decompose_mk(const GWPath& path, double m_eps) {
  if (!path.eps) throw std::logic_error("decompose_mk: immigration was not recorded for this path");
  const auto& eps = *path.eps;
  if (eps.size() + 1 != path.x.size()) throw std::logic_error("decompose_mk: immigration record length mismatch");
  MkDecomposition d;
  d.offspring_part.resize(eps.size());
  d.immigration_part.resize(eps.size());
  for (std::size_t k = 1; k < path.x.size(); ++k) {
    const Count born = path.x[k] - eps[k - 1];
    d.offspring_part[k - 1] = born >= path.x[k - 1] ? static_cast<double>(born - path.x[k - 1])
                                                    : -static_cast<double>(path.x[k - 1] - born);
    d.immigration_part[k - 1] = static_cast<double>(eps[k - 1]) - m_eps;
  }
  return d;
}

double reconstruction_error(const GWPath& path, double m_eps) {
  const auto m = martingale_differences(path, m_eps);
  double running = 0.0;
  double worst = 0.0;
  for (std::size_t k = 1; k < path.x.size(); ++k) {
    running += m[k - 1];
    const double rebuilt = static_cast<double>(path.x[0]) + running + static_cast<double>(k) * m_eps;
    worst = std::max(worst, std::abs(rebuilt - static_cast<double>(path.x[k])));
  }
  return worst;
}

PathEnsemble::PathEnsemble(GWConfig config, std::uint64_t master_seed, std::uint64_t n_paths)
    : config_(std::move(config)), seed_(master_seed), n_paths_(n_paths) {
  if (n_paths_ < 1) throw std::invalid_argument("ensemble needs at least one path");
  config_.validate();
}

GWPath PathEnsemble::path(std::uint64_t i) const {
  if (i >= n_paths_) throw std::out_of_range("path index out of range");
  if (!paths_.empty()) return paths_[i];
  return simulate_path(config_, seed_, i);
}

void PathEnsemble::materialize(unsigned threads) {
  std::vector<GWPath> out(n_paths_);
  parallel_for(n_paths_, threads, [&](std::size_t i) { out[i] = simulate_path(config_, seed_, i); });
  paths_ = std::move(out);
}

void PathEnsemble::for_each(unsigned threads,
                            const std::function<void(std::uint64_t, const GWPath&)>& visit) const {
  parallel_for(n_paths_, threads, [&](std::size_t i) {
    if (!paths_.empty()) {
      visit(i, paths_[i]);
    } else {
      visit(i, simulate_path(config_, seed_, i));
    }
  });
}

PathEnsemble generate_ensemble(const GWConfig& config, std::uint64_t master_seed, std::uint64_t n_paths,
                               unsigned threads) {
  PathEnsemble e(config, master_seed, n_paths);
  e.materialize(threads);
  return e;
}

void write_paths_csv(std::ostream& out, std::span<const GWPath> paths, double m_eps) {
  const bool with_eps = !paths.empty() && paths.front().eps.has_value();
  out << (with_eps ? "path_id,k,x_k,eps_k,m_k\n" : "path_id,k,x_k,m_k\n");
  std::array<char, 64> buf{};
  for (const auto& p : paths) {
    const auto m = martingale_differences(p, m_eps);
    for (std::size_t k = 0; k < p.x.size(); ++k) {
      out << p.path_index << ',' << k << ',' << p.x[k];
      if (with_eps) {
        out << ',';
        if (k > 0) out << (*p.eps)[k - 1];
      }
      out << ',';
      if (k > 0) {
        auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m[k - 1]);
        out.write(buf.data(), res.ptr - buf.data());
      }
      out << '\n';
    }
  }
}

namespace {

constexpr std::array<char, 8> kMagic{'G', 'W', 'I', 'E', 'N', 'S', '\0', '\0'};

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("ensemble file truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_ensemble_binary(std::ostream& out, const PathEnsemble& ensemble) {
  const bool eps = ensemble.config().record_immigration;
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint32_t>(out, eps ? 1u : 0u);
  put_le<std::uint64_t>(out, ensemble.config().hash());
  put_le<std::uint64_t>(out, ensemble.master_seed());
  put_le<std::uint64_t>(out, ensemble.size());
  put_le<std::uint64_t>(out, ensemble.config().horizon);
  for (std::uint64_t i = 0; i < ensemble.size(); ++i) {
    const GWPath p = ensemble.path(i);
    for (Count v : p.x) put_le<std::uint64_t>(out, v);
    if (eps) {
      for (Count v : *p.eps) put_le<std::uint64_t>(out, v);
    }
  }
}

LoadedEnsemble read_ensemble_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a GWI ensemble file");
  LoadedEnsemble loaded;
  auto& h = loaded.header;
  h.version = get_le<std::uint32_t>(in);
  if (h.version != 1) throw std::runtime_error("unsupported ensemble version " + std::to_string(h.version));
  h.has_immigration = (get_le<std::uint32_t>(in) & 1u) != 0;
  h.config_hash = get_le<std::uint64_t>(in);
  h.master_seed = get_le<std::uint64_t>(in);
  h.n_paths = get_le<std::uint64_t>(in);
  h.horizon = get_le<std::uint64_t>(in);
  loaded.paths.reserve(h.n_paths);
  for (std::uint64_t i = 0; i < h.n_paths; ++i) {
    GWPath p;
    p.path_index = i;
    p.x.resize(h.horizon + 1);
    for (auto& v : p.x) v = get_le<std::uint64_t>(in);
    if (h.has_immigration) {
      p.eps.emplace(h.horizon);
      for (auto& v : *p.eps) v = get_le<std::uint64_t>(in);
    }
    loaded.paths.push_back(std::move(p));
  }
  return loaded;
}

}  // namespace gwi
