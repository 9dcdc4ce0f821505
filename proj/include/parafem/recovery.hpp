#pragma once

#include "parafem/fields.hpp"

#include <vector>

namespace parafem {

/// Vector-valued P1 field: one recovered gradient per vertex.
struct RecoveredGradient
{
  MeshPtr mesh;
  std::vector<Point2> nodal;

  Point2 operator[](std::size_t v) const { return nodal[v]; }
};

/// Weights (1/|K_i|) / sum_j (1/|K_j|) over the elements incident to
/// `vertex`, in node-to-cell order.
std::vector<double> recovery_weights(const Mesh& mesh, Index vertex);

/// Area-inverse weighted average of the element gradients around each vertex.
RecoveredGradient recover_gradient(const FeFunction& uh);

struct Estimate
{
  ElementField local;
  double global = 0.0;
};

/// Local values ||G(grad u_h) - grad u_h||_{0,K}, integrated exactly, and
/// their l2 sum.
Estimate estimate(const FeFunction& uh);

/// (a + b + |a - b|) / 2, with the sums carried in double-double precision so
/// the rounded result is exact.
double combine_pair(double a, double b);

/// (a + b + |a - b|) / 2 elementwise with its l2 sum. Throws
/// std::invalid_argument when the fields live on different meshes.
Estimate combine_estimators(const ElementField& current, const ElementField& previous);

/// Local estimator of the nodal interpolant of `previous` on `mesh`.
ElementField previous_estimator_on_current_mesh(const PointField& previous, const MeshPtr& mesh);

/// sqrt of the sum of squares.
double global_norm(const ElementField& local);

} // namespace parafem
