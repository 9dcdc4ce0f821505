#pragma once

#include "parafem/fields.hpp"

#include <span>
#include <vector>

namespace parafem {

struct SizeFieldInput
{
  ElementField estimators;
  ElementField avg_edges;
  int itero = 1;
  int dim = 2;
  double theta_r = 0.3;
};

/// Average edge length of every element.
ElementField element_avg_edges(const MeshPtr& mesh);

/// Mean of an element field over the elements incident to each vertex.
/// Throws std::invalid_argument on an isolated vertex.
VertexField vertex_averages(const MeshPtr& mesh, const ElementField& field);

/// rho_i = E_i^2 / h_i^d. Throws std::invalid_argument when some h_i <= 0.
VertexField node_density(const VertexField& h, const VertexField& e, int dim);

/// Shortest prefix of the vertices sorted by density (descending, ties by
/// ascending index) whose density sum reaches theta_r times the total.
/// Empty when the total is zero.
std::vector<Index> select_marked(const VertexField& rho, double theta_r);

/// (N_v/k + 1)^(-1/d) on the marked vertices, 1 elsewhere.
std::vector<double> scale_factors(std::span<const Index> marked, std::size_t num_vertices, int dim);

/// Size_i = h_i * Scale_i^itero, floor-clamped at `floor_fraction` times the
/// domain diameter.
VertexField size_field(const SizeFieldInput& input, const MeshPtr& mesh,
                       double floor_fraction = 1e-6);

} // namespace parafem
