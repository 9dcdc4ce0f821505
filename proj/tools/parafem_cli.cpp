#include "parafem/adapt.hpp"
#include "parafem/bench.hpp"
#include "parafem/config.hpp"
#include "parafem/records.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

using namespace parafem;

namespace {

struct RunOptions
{
  std::string case_name;
  std::string config;
  std::string out = "out";
  std::optional<double> etol, tau, t_end, theta_r;
  std::optional<std::string> generator;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_vertices;
};

void add_run_flags(CLI::App* cmd, RunOptions& o)
{
  cmd->add_option("case", o.case_name, "rotation, diffusion or splitting")->required();
  cmd->add_option("--config", o.config, "INI file with problem/adapt/surrogate/solver/mesh sections");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--etol", o.etol, "estimator tolerance (default: the case's)");
  cmd->add_option("--tau", o.tau, "time step");
  cmd->add_option("--t-end", o.t_end, "final time");
  cmd->add_option("--theta-r", o.theta_r, "size-field marking fraction");
  cmd->add_option("--generator", o.generator, "external or fallback");
  cmd->add_option("--seed", o.seed, "network initialization seed");
  cmd->add_option("--max-vertices", o.max_vertices, "fallback generator vertex budget (0 = none)");
}

/// Case defaults, then the config file and PARAFEM_* variables, then flags.
AdaptConfig resolve_config(const RunOptions& o, const ManufacturedCase& c)
{
  AdaptConfig base;
  base.etol = c.etol;
  base.initial_h = c.initial_h;
  AdaptConfig cfg = load_config(o.config, base);
  if (o.etol)
    cfg.etol = *o.etol;
  if (o.tau)
    cfg.tau = *o.tau;
  if (o.t_end)
    cfg.t_end = *o.t_end;
  if (o.theta_r)
    cfg.theta_r = *o.theta_r;
  if (o.generator)
    cfg.generator = parse_generator_kind(*o.generator);
  if (o.seed)
    cfg.seed = *o.seed;
  if (o.max_vertices)
    cfg.max_vertices = *o.max_vertices;
  cfg.validate();
  return cfg;
}

void print_record(const AdaptRecord& r)
{
  std::printf("step %d t=%.4g iterations %zu nov %zu eta %.4g", r.step, r.time, r.iterations.size(),
              r.final_nov, r.iterations.empty() ? 0.0 : r.iterations.back().eta);
  if (r.training.adam_epochs + r.training.lbfgs_iterations > 0)
    std::printf(" train adam %d lbfgs %d loss %.3g", r.training.adam_epochs,
                r.training.lbfgs_iterations, r.training.final_loss);
  std::printf("%s\n", r.cap_warning ? " (iteration cap)" : "");
  std::fflush(stdout);
}

int do_run(const RunOptions& o, bool baseline)
{
  const auto c = make_case(o.case_name);
  const AdaptConfig cfg = resolve_config(o, c);
  const auto problem = c.problem(cfg.t_end);
  RecordWriter writer(o.out);
  auto sink = [&](const AdaptRecord& r) {
    writer.write(r);
    print_record(r);
  };
  const auto records = baseline ? run_baseline(problem, cfg, sink) : run(problem, cfg, sink);
  std::vector<IterationRecord> its;
  for (const auto& r : records)
    its.insert(its.end(), r.iterations.begin(), r.iterations.end());
  write_report(make_report(its), std::filesystem::path(o.out) / "report");
  std::printf("records written to %s\n", o.out.c_str());
  return 0;
}

int do_report(const std::string& records, const std::string& out)
{
  const auto rep = make_report(read_records(records));
  write_report(rep, out);
  auto show = [](const char* label, const std::optional<double>& s) {
    if (s)
      std::printf("%s slope %.6f\n", label, *s);
    else
      std::printf("%s slope n/a\n", label);
  };
  show("final-iteration", rep.final_slope);
  show("all-iteration", rep.all_slope);
  return 0;
}

int do_check(const std::string& generator, const std::string& gmsh)
{
  const auto exe = resolve_gmsh_executable(gmsh);
  const auto version = gmsh_version(exe);
  if (version)
    std::printf("gmsh: %s (%s)\n", exe.c_str(), version->c_str());
  else
    std::printf("gmsh: %s not found\n", exe.c_str());
  std::printf("fallback generator: available\n");
  if (parse_generator_kind(generator) == GeneratorKind::external && !version) {
    std::fprintf(stderr, "parafem: external generator requested but '%s' cannot be run\n",
                 exe.c_str());
    return 1;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Surrogate-assisted adaptive finite elements for the heat equation"};
  app.require_subcommand(1);

  RunOptions run_opts, base_opts;
  auto* run_cmd = app.add_subcommand("run", "adaptive run with surrogate-driven mesh generation");
  add_run_flags(run_cmd, run_opts);
  auto* base_cmd = app.add_subcommand("baseline", "Doerfler marking with bisection, no coarsening");
  add_run_flags(base_cmd, base_opts);

  std::string records, report_out = "report";
  auto* report_cmd = app.add_subcommand("report", "convergence report from a records.csv");
  report_cmd->add_option("records", records, "records.csv written by run or baseline")->required();
  report_cmd->add_option("--out", report_out, "output directory")->capture_default_str();

  std::string check_generator = "fallback", check_gmsh = "gmsh";
  auto* check_cmd = app.add_subcommand("check", "probe for the external mesh generator");
  check_cmd->add_option("--generator", check_generator, "external or fallback")->capture_default_str();
  check_cmd->add_option("--gmsh", check_gmsh, "generator executable")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd)
      return do_run(run_opts, false);
    if (*base_cmd)
      return do_run(base_opts, true);
    if (*report_cmd)
      return do_report(records, report_out);
    if (*check_cmd)
      return do_check(check_generator, check_gmsh);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "parafem: %s\n", e.what());
    return 1;
  }
  return 1;
}
