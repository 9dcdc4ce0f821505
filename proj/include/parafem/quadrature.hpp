#pragma once

#include "parafem/geometry.hpp"

#include <array>
#include <vector>

namespace parafem {

/// Rule on the reference triangle in barycentric coordinates. Weights sum to
/// one; multiply by the element area when integrating.
struct QuadratureRule
{
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return weights.size(); }

  Point2 map(const std::array<Point2, 3>& tri, std::size_t q) const
  {
    const auto& b = points[q];
    return {b[0] * tri[0].x + b[1] * tri[1].x + b[2] * tri[2].x,
            b[0] * tri[0].y + b[1] * tri[1].y + b[2] * tri[2].y};
  }
};

/// Six-point Dunavant rule, exact for polynomials of degree 4. Used for every
/// load-type integral.
const QuadratureRule& dunavant4();

/// One-point centroid rule, degree 1.
const QuadratureRule& centroid_rule();

/// Symmetric rule of the given Dunavant degree (1, 2, 4 or 5).
const QuadratureRule& triangle_rule(int degree);

} // namespace parafem
