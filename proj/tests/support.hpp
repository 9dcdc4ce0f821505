#pragma once

#include "parafem/mesh.hpp"
#include "parafem/refine.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace parafem::testing {

inline DomainPtr unit_square()
{
  return std::make_shared<const PolygonDomain>(PolygonDomain::rectangle(0, 0, 1, 1));
}

inline DomainPtr centered_square()
{
  return std::make_shared<const PolygonDomain>(PolygonDomain::rectangle(-1, -1, 1, 1));
}

/// K0 = (v0, v1, v2), K1 = (v0, v2, v3) on the unit square.
inline MeshPtr two_triangle_square()
{
  return make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {Triangle{0, 1, 2}, Triangle{0, 2, 3}},
                   unit_square());
}

/// Unit square split by both diagonals; vertex 4 is the center.
inline MeshPtr crisscross_square()
{
  return make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}},
                   {Triangle{0, 1, 4}, Triangle{1, 2, 4}, Triangle{2, 3, 4}, Triangle{3, 0, 4}},
                   unit_square());
}

/// Structured square mesh with interior vertices jittered and a few rounds of
/// random local bisection, so element shapes and valences vary.
inline MeshPtr random_mesh(std::mt19937_64& rng, int max_cells = 4, int rounds = 2)
{
  std::uniform_int_distribution<int> cells(1, max_cells);
  const int nx = cells(rng), ny = cells(rng);
  auto base = structured_rectangle_mesh(-1, -1, 1, 1, nx, ny);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  auto vertices = base->vertices();
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    if (base->is_boundary(static_cast<Index>(v)))
      continue;
    vertices[v].x += jitter(rng) * 2.0 / nx;
    vertices[v].y += jitter(rng) * 2.0 / ny;
  }
  MeshPtr mesh = label_longest_edges(make_mesh(vertices, base->elements(), base->domain_ptr()));
  std::bernoulli_distribution pick(0.3);
  for (int r = 0; r < rounds; ++r) {
    std::vector<Index> marked;
    for (std::size_t k = 0; k < mesh->num_elements(); ++k)
      if (pick(rng))
        marked.push_back(static_cast<Index>(k));
    mesh = bisect_refine(mesh, marked).mesh;
  }
  return mesh;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
  TempDir()
  {
    std::string tmpl = (std::filesystem::temp_directory_path() / "parafem_test_XXXXXX").string();
    if (!::mkdtemp(tmpl.data()))
      throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace parafem::testing
