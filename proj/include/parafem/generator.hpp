#pragma once

#include "parafem/fields.hpp"
#include "parafem/mesh.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace parafem {

class GeneratorError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class GeneratorNotFound : public GeneratorError
{
public:
  using GeneratorError::GeneratorError;
};

/// Produces meshes of a domain, either uniform or following a vertex size
/// field defined on a guide mesh.
class MeshGenerator
{
public:
  virtual ~MeshGenerator() = default;
  virtual MeshPtr uniform(const DomainPtr& domain, double h) = 0;
  virtual MeshPtr from_size_field(const VertexField& size) = 0;
  virtual std::string name() const = 0;
};

/// Ear clipping plus longest-edge bisection; deterministic and hermetic.
class FallbackGenerator final : public MeshGenerator
{
public:
  /// `max_vertices` = 0 means no vertex budget.
  explicit FallbackGenerator(std::size_t max_vertices = 0) : max_vertices_(max_vertices) {}

  MeshPtr uniform(const DomainPtr& domain, double h) override;
  MeshPtr from_size_field(const VertexField& size) override;
  std::string name() const override { return "fallback"; }

  /// Violations left over by the last call (sweep cap reached).
  std::size_t last_remaining_violations() const { return last_remaining_; }
  bool last_budget_exhausted() const { return last_budget_exhausted_; }
  std::size_t max_vertices() const { return max_vertices_; }

private:
  std::size_t max_vertices_ = 0;
  std::size_t last_remaining_ = 0;
  bool last_budget_exhausted_ = false;
};

struct GmshOptions
{
  std::string executable = "gmsh";
  std::vector<std::string> extra_flags;
  /// Directory for domain.geo, field.pos and out.msh; a fresh temporary
  /// directory is created when empty.
  std::filesystem::path workdir;
  /// When the executable cannot be started, fall back to the built-in
  /// generator instead of throwing GeneratorError.
  bool fallback_if_missing = false;
  /// Vertex budget handed to the fallback generator.
  std::size_t fallback_max_vertices = 0;
};

/// Executable named by $PARAFEM_GMSH, else `configured`.
std::string resolve_gmsh_executable(const std::string& configured);

/// First line printed by `<executable> --version`, or nullopt if it cannot
/// be run.
std::optional<std::string> gmsh_version(const std::string& executable);

/// Runs argv[0] with the given arguments inside `cwd`; returns the exit code,
/// or -1 if the program could not be started.
int run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                const std::filesystem::path& log);

/// External Gmsh subprocess: writes domain.geo (+ field.pos) and runs
/// `gmsh -2 -format msh2 -o out.msh domain.geo`.
class GmshGenerator final : public MeshGenerator
{
public:
  explicit GmshGenerator(GmshOptions options);

  MeshPtr uniform(const DomainPtr& domain, double h) override;
  MeshPtr from_size_field(const VertexField& size) override;
  std::string name() const override { return "external"; }

  const std::filesystem::path& workdir() const { return workdir_; }

private:
  MeshPtr run(const DomainPtr& domain);

  GmshOptions options_;
  std::filesystem::path workdir_;
  FallbackGenerator fallback_;
};

enum class GeneratorKind
{
  external,
  fallback,
};

GeneratorKind parse_generator_kind(const std::string& s);

/// The fallback generator takes `max_vertices` as its budget.
std::unique_ptr<MeshGenerator> make_generator(GeneratorKind kind, GmshOptions options = {},
                                              std::size_t max_vertices = 0);

/// Uniform mesh of the domain with target edge length h.
MeshPtr generate_mesh(MeshGenerator& generator, const DomainPtr& domain, double h);
/// Mesh of the size field's domain honouring the field (floor-clamped by the
/// caller).
MeshPtr generate_mesh(MeshGenerator& generator, const VertexField& size);

} // namespace parafem
