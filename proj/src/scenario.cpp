#include "gwi/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace gwi {

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw ScenarioError("field '" + field + "': " + msg);
}

const nlohmann::json* find(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  return it == doc.end() ? nullptr : &*it;
}

bool is_count(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::uint64_t get_count(const nlohmann::json& doc, const char* key, std::uint64_t fallback) {
  const auto* v = find(doc, key);
  if (!v) return fallback;
  if (!is_count(*v)) field_error(key, "must be a nonnegative integer");
  return v->get<std::uint64_t>();
}

double get_real(const nlohmann::json& doc, const char* key, double fallback) {
  const auto* v = find(doc, key);
  if (!v) return fallback;
  if (!v->is_number()) field_error(key, "must be a number");
  return v->get<double>();
}

template <class T>
std::vector<T> get_list(const nlohmann::json& doc, const char* key, std::vector<T> fallback) {
  const auto* v = find(doc, key);
  if (!v) return fallback;
  if (!v->is_array()) field_error(key, "must be an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto& e = (*v)[i];
    const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
    if constexpr (std::is_integral_v<T>) {
      if (!is_count(e)) field_error(where, "must be a nonnegative integer");
    } else {
      if (!e.is_number()) field_error(where, "must be a number");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

nlohmann::json parse_scenario_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ScenarioError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                        ": " + e.what());
  }
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ScenarioError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ScenarioError("override '" + assignment + "' has an empty path component");
    if (!node->is_object()) throw ScenarioError("override '" + assignment + "': '" + part + "' is not inside an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = nlohmann::json::object();
    start = dot + 1;
  }
}

Scenario scenario_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
  const auto schema = get_count(doc, "schema", 0);
  if (schema != static_cast<std::uint64_t>(kScenarioSchema)) {
    field_error("schema", "expected " + std::to_string(kScenarioSchema) + ", got " + std::to_string(schema));
  }
  Scenario s;
  if (const auto* name = find(doc, "name")) {
    if (!name->is_string()) field_error("name", "must be a string");
    s.name = name->get<std::string>();
  } else {
    field_error("name", "is required");
  }

  const auto* gw = find(doc, "gw");
  if (!gw || !gw->is_object()) field_error("gw", "must be an object");
  try {
    s.gw = GWConfig::from_json(*gw);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("field 'gw': ") + e.what());
  }

  const double m_eps = s.gw.immigration.mean();
  const double sigma2 = s.gw.offspring.variance();
  s.sde = {m_eps, sigma2, 0.0};
  if (const auto* sde = find(doc, "sde")) {
    if (!sde->is_object()) field_error("sde", "must be an object");
    const double given_m = get_real(*sde, "m_eps", m_eps);
    const double given_s = get_real(*sde, "sigma2_xi", sigma2);
    if (!close(given_m, m_eps)) {
      field_error("sde.m_eps", "value " + std::to_string(given_m) + " disagrees with the immigration mean " +
                                   std::to_string(m_eps));
    }
    if (!close(given_s, sigma2)) {
      field_error("sde.sigma2_xi", "value " + std::to_string(given_s) + " disagrees with the offspring variance " +
                                       std::to_string(sigma2));
    }
    s.sde.x0 = get_real(*sde, "x0", 0.0);
  }
  try {
    s.sde.validate();
  } catch (const std::invalid_argument& e) {
    field_error("sde", e.what());
  }

  s.n_ladder = get_list<std::uint64_t>(doc, "n_ladder", s.n_ladder);
  s.t_values = get_list<double>(doc, "t_values", s.t_values);
  s.horizon = get_real(doc, "T", s.horizon);
  s.theta_values = get_list<double>(doc, "theta_values", s.theta_values);
  s.n_paths = get_count(doc, "n_paths", s.n_paths);
  s.master_seed = get_count(doc, "master_seed", s.master_seed);
  s.moment_k = get_list<std::uint64_t>(doc, "moment_k", s.moment_k);
  s.sde_steps = get_count(doc, "sde_steps", s.sde_steps);
  s.sde_paths = get_count(doc, "sde_paths", s.sde_paths);
  if (const auto* tol = find(doc, "tolerances")) {
    try {
      s.tolerances = Tolerances::from_json(*tol);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("field ") + e.what());
    }
  }
  if (const auto* out = find(doc, "output_dir")) {
    if (!out->is_string()) field_error("output_dir", "must be a string");
    s.output_dir = out->get<std::string>();
  }
  if (s.n_paths < 1) field_error("n_paths", "must be at least 1");
  if (s.sde_steps < 1) field_error("sde_steps", "must be at least 1");

  try {
    s.plan(1).validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("field ") + e.what());
  }
  return s;
}

VerificationPlan Scenario::plan(unsigned threads) const {
  VerificationPlan p;
  p.name = name;
  p.config = gw;
  p.sde = sde;
  p.n_ladder = n_ladder;
  p.t_values = t_values;
  p.horizon = horizon;
  p.theta_values = theta_values;
  p.n_paths = n_paths;
  p.seed = master_seed;
  p.moment_k = moment_k;
  p.tolerances = tolerances;
  p.threads = threads;
  return p;
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides,
                       const std::optional<std::string>& seed_env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc = parse_scenario_text(buffer.str());
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
  if (seed_env) {
    try {
      std::size_t used = 0;
      const auto seed = std::stoull(*seed_env, &used, 0);
      if (used != seed_env->size()) throw std::invalid_argument("trailing characters");
      doc["master_seed"] = seed;
    } catch (const std::exception&) {
      throw ScenarioError("GWI_SEED='" + *seed_env + "' is not an unsigned integer");
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return scenario_from_json(doc);
}

}  // namespace gwi
