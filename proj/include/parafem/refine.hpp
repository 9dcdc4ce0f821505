#pragma once

#include "parafem/fields.hpp"
#include "parafem/mesh.hpp"

#include <span>
#include <vector>

namespace parafem {

/// How the refinement edge of each element is chosen.
enum class RefinementEdge
{
  /// Edge opposite the first vertex of each element triple. Children put the
  /// new midpoint first, which gives newest-vertex bisection.
  newest_vertex,
  /// Longest edge, recomputed from geometry on every call.
  longest,
};

/// Coarse-to-fine bookkeeping of one refinement.
struct Ancestry
{
  std::size_t coarse_vertices = 0;
  /// For every fine vertex v >= coarse_vertices: the coarse edge it bisects.
  std::vector<std::array<Index, 2>> midpoint_of;
  /// Coarse element each fine element descends from.
  std::vector<Index> element_parent;
};

struct RefineResult
{
  MeshPtr mesh;
  Ancestry ancestry;
};

/// Rotates every element so its longest edge is opposite the first vertex.
/// Ties are broken by the global vertex ids of the competing edges, so both
/// neighbours of a tied edge agree.
MeshPtr label_longest_edges(const MeshPtr& mesh);

/// Bisects the marked elements and every element needed for conforming
/// closure. New vertices are midpoints of edges of the input mesh.
RefineResult bisect_refine(const MeshPtr& mesh,
                           std::span<const Index> marked,
                           RefinementEdge rule = RefinementEdge::newest_vertex);

/// Fine-mesh interpolant of a coarse P1 function: coarse vertices keep their
/// value, midpoints take the mean of their parent edge. Throws if the
/// ancestry does not match the meshes.
FeFunction nested_interpolate(const FeFunction& coarse, const MeshPtr& fine,
                              const Ancestry& ancestry);

struct FallbackResult
{
  MeshPtr mesh;
  int sweeps = 0;
  /// Elements still larger than their target when the sweep cap was hit.
  std::size_t remaining_violations = 0;
  /// Refinement stopped at the vertex budget.
  bool budget_exhausted = false;
};

inline constexpr int kFallbackSweepCap = 20;

/// Generator-free substitute for size-field driven remeshing: repeatedly
/// bisects the longest edge of every element whose mean edge length exceeds
/// the size field (linearly interpolated on `size`'s mesh) at its centroid.
/// With a non-zero `max_vertices`, the sweep that would exceed the budget
/// only bisects the elements furthest above target and refinement stops.
FallbackResult fallback_refine(const VertexField& size, int max_sweeps = kFallbackSweepCap,
                               std::size_t max_vertices = 0);

} // namespace parafem
