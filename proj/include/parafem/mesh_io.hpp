#pragma once

#include "parafem/fields.hpp"
#include "parafem/mesh.hpp"

#include <filesystem>
#include <iosfwd>

namespace parafem {

/// Writes a Gmsh ASCII post-processing view with one scalar triangle
/// `ST(...)` record per element carrying the three vertex sizes. Usable as a
/// PostView background field. Throws std::invalid_argument on non-positive
/// sizes and std::runtime_error on I/O failure.
void write_background_field(const VertexField& size, const std::filesystem::path& path);
void write_background_field(const VertexField& size, std::ostream& out);

/// Gmsh geometry script for a plane polygon. With `background_view` set the
/// script merges that POS file and uses it as the background size field;
/// otherwise every corner point gets characteristic length `uniform_h`.
void write_geo(const PolygonDomain& domain, const std::filesystem::path& path,
               double uniform_h, const std::filesystem::path* background_view = nullptr);

/// Reads an ASCII Gmsh mesh (format 2.2 or 4.1). Point and line elements are
/// skipped; volume elements or other cell types are rejected. Unreferenced
/// nodes are dropped. Without a domain the boundary loop of the mesh becomes
/// the domain polygon.
MeshPtr parse_msh(const std::filesystem::path& path, DomainPtr domain = nullptr);
MeshPtr parse_msh(std::istream& in, DomainPtr domain = nullptr);

/// Writes MSH 2.2 ASCII (nodes and type-2 triangles).
void write_msh(const Mesh& mesh, const std::filesystem::path& path);

/// Polygon traced from the boundary edges of a single-component mesh, with
/// collinear vertices removed.
DomainPtr domain_from_boundary(const std::vector<Point2>& vertices,
                               const std::vector<Triangle>& elements);

} // namespace parafem
