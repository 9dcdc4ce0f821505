#pragma once

#include "parafem/geometry.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace parafem {

using Index = std::int32_t;
using Triangle = std::array<Index, 3>;

class MeshError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ElementGeometry
{
  double area;
  Point2 centroid;
  double avg_edge;
};

/// Area, centroid and mean edge length of a triangle. Throws MeshError if the
/// signed area is not strictly positive.
ElementGeometry triangle_geometry(Point2 a, Point2 b, Point2 c);

/// Vertex -> incident elements, stored row-compressed.
class Incidence
{
public:
  Incidence() = default;
  Incidence(std::vector<Index> offsets, std::vector<Index> cells)
    : offsets_(std::move(offsets)), cells_(std::move(cells))
  {}

  std::span<const Index> operator[](std::size_t vertex) const
  {
    return {cells_.data() + offsets_[vertex],
            static_cast<std::size_t>(offsets_[vertex + 1] - offsets_[vertex])};
  }
  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t count(std::size_t vertex) const
  {
    return static_cast<std::size_t>(offsets_[vertex + 1] - offsets_[vertex]);
  }

private:
  std::vector<Index> offsets_;
  std::vector<Index> cells_;
};

/// Conforming triangulation of a PolygonDomain. Immutable after construction;
/// element orientation is normalized to counter-clockwise and the boundary
/// vertex set is derived from edges that belong to exactly one element.
class Mesh
{
public:
  Mesh(std::vector<Point2> vertices,
       std::vector<Triangle> elements,
       DomainPtr domain);

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& elements() const { return elements_; }
  const PolygonDomain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return elements_.size(); }

  const std::vector<Index>& boundary_vertices() const { return boundary_; }
  bool is_boundary(Index v) const { return on_boundary_[static_cast<std::size_t>(v)] != 0; }

  double area(std::size_t k) const { return areas_[k]; }
  const std::vector<double>& areas() const { return areas_; }
  std::array<Point2, 3> corners(std::size_t k) const
  {
    const Triangle& t = elements_[k];
    return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
  }

  /// Gradients of the three P1 basis functions on element k.
  std::array<Point2, 3> basis_gradients(std::size_t k) const;

  const Incidence& node_to_cell() const { return node_to_cell_; }

private:
  std::vector<Point2> vertices_;
  std::vector<Triangle> elements_;
  DomainPtr domain_;
  std::vector<double> areas_;
  std::vector<Index> boundary_;
  std::vector<char> on_boundary_;
  Incidence node_to_cell_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

inline MeshPtr make_mesh(std::vector<Point2> vertices,
                         std::vector<Triangle> elements,
                         DomainPtr domain)
{
  return std::make_shared<const Mesh>(std::move(vertices), std::move(elements),
                                      std::move(domain));
}

/// Throws std::out_of_range for an invalid element index.
ElementGeometry element_geometry(const Mesh& mesh, std::size_t k);

/// Incidence list of each vertex; same contents as Mesh::node_to_cell().
Incidence node_to_cell(const Mesh& mesh);

/// Unique undirected edges as (low, high) vertex pairs, sorted.
std::vector<std::array<Index, 2>> mesh_edges(const Mesh& mesh);

struct ConformityReport
{
  bool ok = true;
  std::string message;
};

/// Full invariant check: edge multiplicity, boundary edges on the domain
/// boundary, no unused vertices, and element areas summing to the domain
/// area. Detects hanging nodes and overlaps.
ConformityReport check_conformity(const Mesh& mesh);

/// Uniform nx-by-ny grid of a rectangle, each cell split along the
/// (x0,y0)-(x1,y1) diagonal.
MeshPtr structured_rectangle_mesh(double x0, double y0, double x1, double y1,
                                  int nx, int ny);

/// Triangulation of the domain polygon by ear clipping (no interior vertices).
MeshPtr ear_clip(DomainPtr domain);

/// Point location with barycentric coordinates, backed by a bucket grid.
class PointLocator
{
public:
  explicit PointLocator(MeshPtr mesh);

  struct Hit
  {
    Index element;
    std::array<double, 3> bary;
  };

  /// Element containing p (with a small relative tolerance), if any.
  std::optional<Hit> locate(Point2 p) const;

private:
  MeshPtr mesh_;
  Point2 lo_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<Index>> buckets_;
};

std::array<double, 3> barycentric(const std::array<Point2, 3>& tri, Point2 p);

} // namespace parafem
