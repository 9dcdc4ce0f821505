#include "parafem/generator.hpp"

#include "parafem/mesh_io.hpp"
#include "parafem/refine.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fcntl.h>
#include <iostream>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace parafem {

MeshPtr FallbackGenerator::uniform(const DomainPtr& domain, double h)
{
  if (!(h > 0.0))
    throw std::invalid_argument("uniform mesh size must be positive");
  auto coarse = ear_clip(domain);
  VertexField size(coarse, std::vector<double>(coarse->num_vertices(), h));
  auto result = fallback_refine(size, 64, max_vertices_);
  last_remaining_ = result.remaining_violations;
  last_budget_exhausted_ = result.budget_exhausted;
  return result.mesh;
}

MeshPtr FallbackGenerator::from_size_field(const VertexField& size)
{
  auto result = fallback_refine(size, kFallbackSweepCap, max_vertices_);
  last_remaining_ = result.remaining_violations;
  last_budget_exhausted_ = result.budget_exhausted;
  if (result.budget_exhausted)
    std::cerr << "parafem: fallback refiner stopped at the budget of " << max_vertices_
              << " vertices with " << result.remaining_violations << " elements above target\n";
  else if (result.remaining_violations > 0)
    std::cerr << "parafem: fallback refiner hit the sweep cap with "
              << result.remaining_violations << " elements above target\n";
  return result.mesh;
}

std::string resolve_gmsh_executable(const std::string& configured)
{
  if (const char* env = std::getenv("PARAFEM_GMSH"); env && *env)
    return env;
  return configured.empty() ? "gmsh" : configured;
}

int run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                const std::filesystem::path& log)
{
  std::vector<char*> args;
  for (const auto& a : argv)
    args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  if (!log.empty()) {
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  }
  if (!cwd.empty())
    posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0)
    return -1;
  int status = 0;
  if (waitpid(pid, &status, 0) < 0)
    return -1;
  if (WIFEXITED(status))
    return WEXITSTATUS(status);
  return -1;
}

std::optional<std::string> gmsh_version(const std::string& executable)
{
  const auto dir = std::filesystem::temp_directory_path();
  const auto log = dir / ("parafem_gmsh_version_" + std::to_string(::getpid()) + ".txt");
  const int rc = run_process({executable, "--version"}, {}, log);
  std::optional<std::string> out;
  if (rc == 0) {
    std::FILE* f = std::fopen(log.c_str(), "r");
    if (f) {
      char buf[256] = {0};
      if (std::fgets(buf, sizeof buf, f)) {
        std::string line(buf);
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
          line.pop_back();
        out = line;
      } else {
        out = std::string();
      }
      std::fclose(f);
    }
  }
  std::error_code ec;
  std::filesystem::remove(log, ec);
  return out;
}

GmshGenerator::GmshGenerator(GmshOptions options)
    : options_(std::move(options)), fallback_(options_.fallback_max_vertices)
{
  options_.executable = resolve_gmsh_executable(options_.executable);
  workdir_ = options_.workdir;
  if (workdir_.empty()) {
    std::string tmpl = (std::filesystem::temp_directory_path() / "parafem_gmsh_XXXXXX").string();
    if (!::mkdtemp(tmpl.data()))
      throw GeneratorError("cannot create temporary directory for gmsh");
    workdir_ = tmpl;
  }
  std::filesystem::create_directories(workdir_);
}

MeshPtr GmshGenerator::run(const DomainPtr& domain)
{
  std::vector<std::string> argv{options_.executable, "-2", "-format", "msh2", "-o", "out.msh",
                                "domain.geo"};
  argv.insert(argv.begin() + 1, options_.extra_flags.begin(), options_.extra_flags.end());
  std::error_code ec;
  std::filesystem::remove(workdir_ / "out.msh", ec);
  const int rc = run_process(argv, workdir_, workdir_ / "gmsh.log");
  if (rc == -1 || rc == 127)
    throw GeneratorNotFound("gmsh executable not found: " + options_.executable);
  if (rc != 0)
    throw GeneratorError("gmsh exited with code " + std::to_string(rc) + " (see " +
                         (workdir_ / "gmsh.log").string() + ")");
  try {
    auto mesh = parse_msh(workdir_ / "out.msh", domain);
    if (mesh->num_elements() == 0)
      throw GeneratorError("gmsh produced an empty mesh");
    return mesh;
  } catch (const MeshError& e) {
    throw GeneratorError(std::string("gmsh produced malformed output: ") + e.what());
  }
}

MeshPtr GmshGenerator::uniform(const DomainPtr& domain, double h)
{
  try {
    write_geo(*domain, workdir_ / "domain.geo", h);
    return run(domain);
  } catch (const GeneratorNotFound& e) {
    if (!options_.fallback_if_missing)
      throw;
    std::cerr << "parafem: " << e.what() << "; using fallback generator\n";
    return fallback_.uniform(domain, h);
  }
}

MeshPtr GmshGenerator::from_size_field(const VertexField& size)
{
  const DomainPtr& domain = size.mesh->domain_ptr();
  try {
    const auto pos = workdir_ / "field.pos";
    write_background_field(size, pos);
    const double hmax = *std::max_element(size.values.begin(), size.values.end());
    write_geo(*domain, workdir_ / "domain.geo", hmax, &pos);
    return run(domain);
  } catch (const GeneratorNotFound& e) {
    if (!options_.fallback_if_missing)
      throw;
    std::cerr << "parafem: " << e.what() << "; using fallback generator\n";
    return fallback_.from_size_field(size);
  }
}

GeneratorKind parse_generator_kind(const std::string& s)
{
  if (s == "external" || s == "gmsh")
    return GeneratorKind::external;
  if (s == "fallback")
    return GeneratorKind::fallback;
  throw std::invalid_argument("unknown generator '" + s + "' (expected external or fallback)");
}

std::unique_ptr<MeshGenerator> make_generator(GeneratorKind kind, GmshOptions options,
                                              std::size_t max_vertices)
{
  if (kind == GeneratorKind::fallback)
    return std::make_unique<FallbackGenerator>(max_vertices);
  options.fallback_max_vertices = max_vertices;
  return std::make_unique<GmshGenerator>(std::move(options));
}

MeshPtr generate_mesh(MeshGenerator& generator, const DomainPtr& domain, double h)
{
  return generator.uniform(domain, h);
}

MeshPtr generate_mesh(MeshGenerator& generator, const VertexField& size)
{
  return generator.from_size_field(size);
}

} // namespace parafem
