#include "gwi/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "gwi/convergence.hpp"
#include "gwi/diffusion.hpp"
#include "gwi/gw_engine.hpp"
#include "gwi/moments.hpp"
#include "gwi/parallel.hpp"
#include "gwi/scenario.hpp"

namespace gwi {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string command;
  std::string scenario_path;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  std::string out_dir;
  std::string format = "csv";
  std::string report_path;
  bool timings = false;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  return f;
}

nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

int cmd_simulate(const Scenario& s, const Options& o, const fs::path& dir, std::ostream& out) {
  PathEnsemble ensemble(s.gw, s.master_seed, s.n_paths);
  ensemble.materialize(o.threads);
  {
    auto f = open_output(dir / "ensemble.gwe");
    write_ensemble_binary(f, ensemble);
  }
  const double m_eps = s.gw.immigration.mean();
  if (o.format == "csv") {
    auto f = open_output(dir / "paths.csv");
    write_paths_csv(f, ensemble.paths(), m_eps);
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : ensemble.paths()) {
      nlohmann::json row = {{"path_id", p.path_index}, {"x", p.x}, {"m", martingale_differences(p, m_eps)}};
      if (p.eps) row["eps"] = *p.eps;
      rows.push_back(std::move(row));
    }
    auto f = open_output(dir / "paths.json");
    f << rows.dump(1) << '\n';
  }
  out << "simulated " << s.n_paths << " paths of " << s.gw.horizon << " generations into " << dir.string() << '\n';
  return 0;
}

int cmd_moments(const Scenario& s, const Options& o, const fs::path& dir, std::ostream& out) {
  const MomentParams mp = moment_params(s.gw);
  const MomentTable table = moment_table(mp, s.gw.horizon);
  if (o.format == "csv") {
    auto f = open_output(dir / "moments.csv");
    write_moment_csv(f, table);
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < table.k_values.size(); ++i) {
      rows.push_back({{"k", table.k_values[i]},
                      {"mean_x", table.mean_x[i]},
                      {"var_x", number_or_null(table.var_x[i])},
                      {"mean_m2", number_or_null(table.mean_m2[i])}});
    }
    auto f = open_output(dir / "moments.json");
    f << rows.dump(1) << '\n';
  }
  if (mp.critical() && s.gw.horizon >= 2) {
    auto f = open_output(dir / "order_certificates.csv");
    f << "k,mean_over_k,second_over_k2,abs_m_bound_over_sqrt_k,m2_over_k\n";
    for (const auto& r : order_certificates(mp, s.gw.horizon)) {
      f << r.k << ',' << nlohmann::json(r.mean_over_k).dump() << ',' << nlohmann::json(r.second_over_k2).dump()
        << ',' << nlohmann::json(r.abs_m_bound_over_sqrt_k).dump() << ',' << nlohmann::json(r.m2_over_k).dump()
        << '\n';
    }
  }
  out << "moments for k = 1.." << s.gw.horizon << " written to " << dir.string() << '\n';
  return 0;
}

int cmd_sde(const Scenario& s, const Options& o, const fs::path& dir, std::ostream& out) {
  const double horizon = s.horizon;
  const std::uint64_t n = s.sde_paths > 0 ? s.sde_paths : s.n_paths;
  std::vector<double> euler = euler_endpoints(s.sde, horizon, s.sde_steps, n, s.master_seed, o.threads);
  RandomStream first(s.master_seed, 0, kDiffusionSlot);
  const DiffusionPath euler_sample = euler_path(s.sde, horizon, s.sde_steps, first);

  std::optional<std::vector<double>> exact;
  std::optional<DiffusionPath> exact_sample;
  if (s.sde.sigma2_xi > 0.0 && s.sde.x0 >= 0.0) {
    exact = exact_endpoints(s.sde, horizon, s.sde_steps, n, s.master_seed + 1, o.threads);
    RandomStream stream(s.master_seed + 1, 0, kDiffusionSlot);
    exact_sample = exact_transition_path(s.sde, horizon, s.sde_steps, stream);
  }

  if (o.format == "csv") {
    auto f = open_output(dir / "sde_endpoints_euler.csv");
    write_endpoints_csv(f, euler);
    auto p = open_output(dir / "sde_path_euler.csv");
    euler_sample.write_csv(p);
    if (exact) {
      auto g = open_output(dir / "sde_endpoints_exact.csv");
      write_endpoints_csv(g, *exact);
      auto q = open_output(dir / "sde_path_exact.csv");
      exact_sample->write_csv(q);
    }
  } else {
    nlohmann::json doc = {{"euler_endpoints", euler},
                          {"euler_path", {{"t", euler_sample.times}, {"value", euler_sample.values}}}};
    if (exact) {
      doc["exact_endpoints"] = *exact;
      doc["exact_path"] = {{"t", exact_sample->times}, {"value", exact_sample->values}};
    }
    auto f = open_output(dir / "sde.json");
    f << doc.dump(1) << '\n';
  }
  out << "sde endpoints (" << n << " paths, " << s.sde_steps << " steps) written to " << dir.string() << '\n';
  return 0;
}

int cmd_converge(const Scenario& s, const Options& o, const fs::path& dir, std::ostream& out) {
  const ConvergenceRun run = run_convergence_suite(s.plan(o.threads));
  {
    auto f = open_output(dir / "report.json");
    f << run.report.to_json(o.timings).dump(2) << '\n';
  }
  out << run.report.table(o.timings);
  return run.report.all_pass() ? 0 : 1;
}

int cmd_report(const Options& o, std::ostream& out) {
  fs::path path = o.report_path.empty() ? fs::path(o.out_dir.empty() ? "out" : o.out_dir) / "report.json"
                                        : fs::path(o.report_path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report '" + path.string() + "'");
  std::stringstream text;
  text << in.rdbuf();
  const TestReport report = TestReport::from_json(nlohmann::json::parse(text.str()));
  if (o.format == "json") {
    out << report.to_json(o.timings).dump(2) << '\n';
  } else {
    out << report.table(o.timings);
  }
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Galton-Watson with immigration: simulation and limit-theorem verification", "gwi"};
  Options o;
  app.add_option("command", o.command, "simulate | moments | sde | converge | report")
      ->required()
      ->check(CLI::IsMember({"simulate", "moments", "sde", "converge", "report"}));
  app.add_option("--scenario", o.scenario_path, "scenario JSON file");
  app.add_option("--set", o.overrides, "override a scenario value, e.g. gw.horizon_K=2000 (repeatable)")
      ->take_all()
      ->allow_extra_args(false);
  app.add_option("--threads", o.threads, "worker threads (default: hardware concurrency)");
  app.add_option("--out", o.out_dir, "output directory (default: scenario output_dir)");
  app.add_option("--format", o.format, "tabular output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--report", o.report_path, "report file for the report command");
  app.add_flag("--timings", o.timings, "include wall-clock runtimes in JSON reports");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    const int code = app.exit(e, msg, msg);
    if (code == 0) {
      out << msg.str();
      return 0;
    }
    err << msg.str();
    return 2;
  }
  if (o.threads == 0) o.threads = default_thread_count();

  try {
    if (o.command == "report") return cmd_report(o, out);
    if (o.scenario_path.empty()) {
      err << "error: --scenario is required for '" << o.command << "'\n";
      return 2;
    }
    std::optional<std::string> seed_env;
    if (const char* env = std::getenv("GWI_SEED")) seed_env = env;
    const Scenario scenario = load_scenario(o.scenario_path, o.overrides, seed_env);
    const fs::path dir = o.out_dir.empty() ? fs::path(scenario.output_dir) : fs::path(o.out_dir);
    fs::create_directories(dir);

    if (o.command == "simulate") return cmd_simulate(scenario, o, dir, out);
    if (o.command == "moments") return cmd_moments(scenario, o, dir, out);
    if (o.command == "sde") return cmd_sde(scenario, o, dir, out);
    return cmd_converge(scenario, o, dir, out);
  } catch (const ScenarioError& e) {
    err << "scenario error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace gwi
