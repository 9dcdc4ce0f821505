#include "parafem/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace parafem {

const std::vector<std::string>& known_config_keys()
{
  static const std::vector<std::string> keys{
    "problem.case",
    "adapt.etol",
    "adapt.tau",
    "adapt.t_end",
    "adapt.theta_r",
    "adapt.theta_d",
    "adapt.baseline_max_iters",
    "surrogate.layers",
    "surrogate.seed",
    "surrogate.learning_rate",
    "surrogate.loss_target",
    "surrogate.adam_epochs",
    "surrogate.warm_adam_epochs",
    "surrogate.lbfgs_history",
    "surrogate.lbfgs_max_iterations",
    "solver.kind",
    "solver.tol",
    "mesh.generator",
    "mesh.initial_h",
    "mesh.gmsh",
    "mesh.max_vertices",
    "mesh.fallback_if_missing",
  };
  return keys;
}

ConfigValues read_config_file(const std::filesystem::path& path)
{
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  ConfigValues values;
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw std::runtime_error("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body)
      values[section + "." + key] = value.get_value<std::string>();
  }
  return values;
}

void apply_env_overrides(ConfigValues& values)
{
  for (const auto& key : known_config_keys()) {
    std::string env = "PARAFEM_" + key;
    std::replace(env.begin(), env.end(), '.', '_');
    std::transform(env.begin(), env.end(), env.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (const char* v = std::getenv(env.c_str()); v && *v)
      values[key] = v;
  }
}

namespace {

double to_double(const std::string& key, const std::string& v)
{
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size())
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v)
{
  std::size_t pos = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size())
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& key, const std::string& v)
{
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  throw std::invalid_argument("config: " + key + " expects a boolean, got '" + v + "'");
}

std::vector<int> to_layers(const std::string& key, const std::string& v)
{
  std::vector<int> dims;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ','))
    dims.push_back(static_cast<int>(to_int(key, cell)));
  return dims;
}

} // namespace

void apply_config(const ConfigValues& values, AdaptConfig& cfg)
{
  for (const auto& [key, v] : values) {
    if (key == "problem.case")
      continue;
    else if (key == "adapt.etol")
      cfg.etol = to_double(key, v);
    else if (key == "adapt.tau")
      cfg.tau = to_double(key, v);
    else if (key == "adapt.t_end")
      cfg.t_end = to_double(key, v);
    else if (key == "adapt.theta_r")
      cfg.theta_r = to_double(key, v);
    else if (key == "adapt.theta_d")
      cfg.theta_d = to_double(key, v);
    else if (key == "adapt.baseline_max_iters")
      cfg.baseline_max_iters = static_cast<int>(to_int(key, v));
    else if (key == "surrogate.layers")
      cfg.layers = to_layers(key, v);
    else if (key == "surrogate.seed")
      cfg.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "surrogate.learning_rate")
      cfg.train.learning_rate = to_double(key, v);
    else if (key == "surrogate.loss_target")
      cfg.train.loss_target = to_double(key, v);
    else if (key == "surrogate.adam_epochs")
      cfg.train.adam_epochs = static_cast<int>(to_int(key, v));
    else if (key == "surrogate.warm_adam_epochs")
      cfg.warm_adam_epochs = static_cast<int>(to_int(key, v));
    else if (key == "surrogate.lbfgs_history")
      cfg.train.lbfgs_history = static_cast<int>(to_int(key, v));
    else if (key == "surrogate.lbfgs_max_iterations")
      cfg.train.lbfgs_max_iterations = static_cast<int>(to_int(key, v));
    else if (key == "solver.kind")
      cfg.solver.kind = parse_solver_kind(v);
    else if (key == "solver.tol")
      cfg.solver.tol = to_double(key, v);
    else if (key == "mesh.generator")
      cfg.generator = parse_generator_kind(v);
    else if (key == "mesh.initial_h")
      cfg.initial_h = to_double(key, v);
    else if (key == "mesh.max_vertices")
      cfg.max_vertices = static_cast<std::size_t>(to_int(key, v));
    else if (key == "mesh.gmsh")
      cfg.gmsh.executable = v;
    else if (key == "mesh.fallback_if_missing")
      cfg.gmsh.fallback_if_missing = to_bool(key, v);
    else
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  cfg.validate();
}

AdaptConfig load_config(const std::filesystem::path& path, AdaptConfig base)
{
  ConfigValues values;
  if (!path.empty())
    values = read_config_file(path);
  apply_env_overrides(values);
  apply_config(values, base);
  return base;
}

} // namespace parafem
