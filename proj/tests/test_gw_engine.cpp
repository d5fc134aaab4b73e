#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "gwi/gw_engine.hpp"
#include "gwi/moments.hpp"
#include "gwi/statistics.hpp"

using gwi::Distribution;
using gwi::GWConfig;
using gwi::GWPath;

namespace {

GWConfig poisson_config(std::uint64_t horizon, bool record = false) {
  GWConfig c;
  c.offspring = Distribution::poisson(1.0);
  c.immigration = Distribution::poisson(1.0);
  c.horizon = horizon;
  c.record_immigration = record;
  return c;
}

GWPath make_path(std::vector<gwi::Count> x, std::optional<std::vector<gwi::Count>> eps = std::nullopt) {
  GWPath p;
  p.x = std::move(x);
  p.eps = std::move(eps);
  return p;
}

}  // namespace

TEST_CASE("deterministic recursions") {
  GWConfig c;
  c.offspring = Distribution::point_mass(1);
  c.immigration = Distribution::point_mass(2);
  c.horizon = 3;
  CHECK(gwi::simulate_path(c, 1, 0).x == std::vector<gwi::Count>{0, 2, 4, 6});

  // No reproduction: each generation is just its immigrants.
  c.offspring = Distribution::point_mass(0);
  c.immigration = Distribution::poisson(4.0);
  c.horizon = 2;
  c.record_immigration = true;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto p = gwi::simulate_path(c, 9, i);
    CHECK(p.x[1] == p.eps->at(0));
    CHECK(p.x[2] == p.eps->at(1));
  }
}

TEST_CASE("unit offspring: increments are the immigrants, paths nondecreasing") {
  GWConfig c;
  c.offspring = Distribution::point_mass(1);
  c.immigration = Distribution::geometric(0.3);
  c.initial = Distribution::poisson(5.0);
  c.horizon = 200;
  c.record_immigration = true;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto p = gwi::simulate_path(c, 3, i);
    gwi::Count total = 0;
    for (std::uint64_t k = 1; k <= c.horizon; ++k) {
      total += p.eps->at(k - 1);
      CHECK(p.x[k] >= p.x[k - 1]);
      CHECK(p.x[k] - p.x[0] == total);
    }
  }
}

TEST_CASE("martingale differences and reconstruction") {
  const auto p = make_path({0, 3, 4});
  CHECK(gwi::martingale_differences(p, 2.0) == std::vector<double>{1.0, -1.0});
  CHECK(gwi::reconstruction_error(p, 2.0) == 0.0);

  const auto line = make_path({0, 2, 4, 6});
  for (double m : gwi::martingale_differences(line, 2.0)) CHECK(m == 0.0);
}

TEST_CASE("decomposition examples") {
  auto d = gwi::decompose_mk(make_path({5, 5}, std::vector<gwi::Count>{2}), 2.0);
  CHECK(d.offspring_part == std::vector<double>{-2.0});
  CHECK(d.immigration_part == std::vector<double>{0.0});

  d = gwi::decompose_mk(make_path({0, 3}, std::vector<gwi::Count>{3}), 1.0);
  CHECK(d.offspring_part == std::vector<double>{0.0});
  CHECK(d.immigration_part == std::vector<double>{2.0});

  CHECK_THROWS_AS(gwi::decompose_mk(make_path({0, 3}), 1.0), std::logic_error);

  GWConfig c;
  c.offspring = Distribution::point_mass(1);
  c.immigration = Distribution::poisson(2.0);
  c.horizon = 30;
  c.record_immigration = true;
  const auto unit = gwi::decompose_mk(gwi::simulate_path(c, 4, 4), 2.0);
  for (double v : unit.offspring_part) CHECK(v == 0.0);
}

TEST_CASE("property: reconstruction and decomposition hold on simulated paths") {
  const auto c = poisson_config(300, true);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto p = gwi::simulate_path(c, 11, i);
    CHECK(gwi::reconstruction_error(p, 1.0) == 0.0);
    const auto m = gwi::martingale_differences(p, 1.0);
    const auto d = gwi::decompose_mk(p, 1.0);
    for (std::size_t k = 0; k < m.size(); ++k) {
      CHECK(p.x[k + 1] >= p.eps->at(k));
      CHECK(d.offspring_part[k] + d.immigration_part[k] == m[k]);
    }
  }
}

TEST_CASE("paths are pure functions of (seed, index, config)") {
  const auto c = poisson_config(100, true);
  const auto a = gwi::generate_ensemble(c, 42, 2, 1);
  const auto b = gwi::generate_ensemble(c, 42, 2, 1);
  const auto threaded = gwi::generate_ensemble(c, 42, 2, 8);
  for (std::uint64_t i = 0; i < 2; ++i) {
    CHECK(a.paths()[i].x == b.paths()[i].x);
    CHECK(a.paths()[i].x == threaded.paths()[i].x);
    CHECK(a.paths()[i].eps == threaded.paths()[i].eps);
  }

  const auto big1 = gwi::generate_ensemble(c, 42, 500, 1);
  const auto big4 = gwi::generate_ensemble(c, 42, 500, 4);
  const gwi::PathEnsemble lazy(c, 42, 500);
  for (std::uint64_t i = 0; i < 500; ++i) {
    CHECK(big1.paths()[i].x == big4.paths()[i].x);
    CHECK(lazy.path(i).x == big1.paths()[i].x);
  }
  CHECK(big1.paths()[0].x == a.paths()[0].x);
  CHECK(gwi::generate_ensemble(c, 43, 1, 1).paths()[0].x != a.paths()[0].x);
}

TEST_CASE("config validation and criticality") {
  auto c = poisson_config(10);
  CHECK(c.is_critical());
  c.offspring = Distribution::poisson(0.9);
  CHECK_FALSE(c.is_critical());
  c.horizon = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  const auto d = poisson_config(17, true);
  const auto back = GWConfig::from_json(d.to_json());
  CHECK(back.to_json() == d.to_json());
  CHECK(back.hash() == d.hash());
  CHECK(poisson_config(18, true).hash() != d.hash());

  // Integers built in code are signed JSON numbers; they must parse like file input.
  const nlohmann::json built = {{"offspring", {{"type", "table"}, {"atoms", {{0, 0.5}, {2, 0.5}}}}},
                                {"immigration", {{"type", "point_mass"}, {"value", 3}}},
                                {"horizon_K", 12}};
  const auto parsed = GWConfig::from_json(built);
  CHECK(parsed.horizon == 12);
  CHECK(parsed.is_critical());
  CHECK_THROWS(GWConfig::from_json({{"offspring", built["offspring"]}, {"immigration", built["immigration"]},
                                    {"horizon_K", -1}}));
}

TEST_CASE("overflow carries the generation") {
  GWConfig c;
  c.offspring = Distribution::point_mass(1000);
  c.immigration = Distribution::point_mass(1);
  c.horizon = 20;
  // X_k >= 1000^(k-1), which passes 2^64 at generation 8.
  try {
    gwi::simulate_path(c, 1, 5);
    FAIL("expected PopulationOverflow");
  } catch (const gwi::PopulationOverflow& e) {
    CHECK(e.generation() == 8);
    CHECK(e.path_index() == 5);
  }
  CHECK_THROWS_AS(gwi::generate_ensemble(c, 1, 3, 2), gwi::PopulationOverflow);
}

TEST_CASE("ensemble moments match the closed forms (1e6 paths, 5 SE)") {
  const auto c = poisson_config(50, true);
  const std::uint64_t n = 1000000;
  const gwi::PathEnsemble ens(c, 20240601, n);
  const std::vector<std::uint64_t> ks{1, 10, 50};
  std::vector<std::vector<double>> xs(ks.size(), std::vector<double>(n));
  std::vector<std::vector<double>> offspring(ks.size(), std::vector<double>(n));
  ens.for_each(1, [&](std::uint64_t i, const GWPath& p) {
    const auto d = gwi::decompose_mk(p, 1.0);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      xs[j][i] = static_cast<double>(p.x[ks[j]]);
      offspring[j][i] = d.offspring_part[ks[j] - 1];
    }
  });
  const auto params = gwi::moment_params(c);
  for (std::size_t j = 0; j < ks.size(); ++j) {
    CAPTURE(ks[j]);
    const auto m = gwi::mean_and_se(xs[j]);
    const auto v = gwi::variance_and_se(xs[j]);
    CHECK(std::abs(m.mean - gwi::mean_xk(params, ks[j])) <= 5.0 * m.se);
    CHECK(std::abs(v.variance - gwi::var_xk_critical(params, ks[j])) <= 5.0 * v.se);
    const auto nk = gwi::mean_and_se(offspring[j]);
    if (nk.se > 0.0) {
      CHECK(std::abs(nk.mean) <= 5.0 * nk.se);
    } else {
      CHECK(nk.mean == 0.0);
    }
  }
}

TEST_CASE("CSV export") {
  const auto p = make_path({0, 3, 4}, std::vector<gwi::Count>{3, 1});
  std::ostringstream out;
  gwi::write_paths_csv(out, std::span<const GWPath>(&p, 1), 2.0);
  CHECK(out.str() == "path_id,k,x_k,eps_k,m_k\n0,0,0,,\n0,1,3,3,1\n0,2,4,1,-1\n");
}

TEST_CASE("property: binary ensemble round trip") {
  for (bool record : {false, true}) {
    const auto c = poisson_config(40, record);
    const auto ens = gwi::generate_ensemble(c, 99, 25, 2);
    std::stringstream buf;
    gwi::write_ensemble_binary(buf, ens);
    const auto loaded = gwi::read_ensemble_binary(buf);
    CHECK(loaded.header.config_hash == c.hash());
    CHECK(loaded.header.master_seed == 99);
    CHECK(loaded.header.n_paths == 25);
    CHECK(loaded.header.horizon == 40);
    CHECK(loaded.header.has_immigration == record);
    REQUIRE(loaded.paths.size() == 25);
    for (std::uint64_t i = 0; i < 25; ++i) {
      CHECK(loaded.paths[i].x == ens.paths()[i].x);
      CHECK(loaded.paths[i].eps == ens.paths()[i].eps);
    }
  }
  std::stringstream junk("not an ensemble at all");
  CHECK_THROWS(gwi::read_ensemble_binary(junk));
}
