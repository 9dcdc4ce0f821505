#include "parafem/recovery.hpp"

#include <cmath>
#include <utility>

namespace parafem {

std::vector<double> recovery_weights(const Mesh& mesh, Index vertex)
{
  const auto cells = mesh.node_to_cell()[static_cast<std::size_t>(vertex)];
  std::vector<double> w;
  w.reserve(cells.size());
  double total = 0.0;
  for (Index k : cells) {
    w.push_back(1.0 / mesh.area(static_cast<std::size_t>(k)));
    total += w.back();
  }
  for (double& x : w)
    x /= total;
  return w;
}

RecoveredGradient recover_gradient(const FeFunction& uh)
{
  const Mesh& mesh = *uh.mesh();
  std::vector<Point2> grads(mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    grads[k] = uh.gradient(k);

  RecoveredGradient g{uh.mesh(), std::vector<Point2>(mesh.num_vertices())};
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const auto cells = mesh.node_to_cell()[v];
    const auto w = recovery_weights(mesh, static_cast<Index>(v));
    Point2 acc{};
    for (std::size_t i = 0; i < cells.size(); ++i)
      acc = acc + w[i] * grads[static_cast<std::size_t>(cells[i])];
    g.nodal[v] = acc;
  }
  return g;
}

double global_norm(const ElementField& local)
{
  double s = 0.0;
  for (double v : local.values)
    s += v * v;
  return std::sqrt(s);
}

Estimate estimate(const FeFunction& uh)
{
  const Mesh& mesh = *uh.mesh();
  const RecoveredGradient g = recover_gradient(uh);
  std::vector<double> local(mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Triangle& t = mesh.elements()[k];
    const Point2 gh = uh.gradient(k);
    std::array<Point2, 3> e;
    for (int i = 0; i < 3; ++i)
      e[i] = g[static_cast<std::size_t>(t[i])] - gh;
    // e^T M_K e per component with M_K = |K|/12 [[2,1,1],[1,2,1],[1,1,2]].
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        s += (i == j ? 2.0 : 1.0) * dot(e[i], e[j]);
    local[k] = std::sqrt(std::max(0.0, s * mesh.area(k) / 12.0));
  }
  ElementField field(uh.mesh(), std::move(local));
  const double global = global_norm(field);
  return {std::move(field), global};
}

namespace {

/// s + e == a + b exactly.
std::pair<double, double> two_sum(double a, double b)
{
  const double s = a + b;
  const double bb = s - a;
  const double e = (a - (s - bb)) + (b - bb);
  return {s, e};
}

} // namespace

double combine_pair(double a, double b)
{
  // a + b and |a - b| as exact double-double values, summed with the
  // rounding errors carried along.
  auto [sum, err] = two_sum(a, b);
  auto [diff, derr] = two_sum(a, -b);
  if (diff < 0.0 || (diff == 0.0 && derr < 0.0)) {
    diff = -diff;
    derr = -derr;
  }
  double comp = err + derr;
  auto [total, terr] = two_sum(sum, diff);
  comp += terr;
  return (total + comp) / 2.0;
}

Estimate combine_estimators(const ElementField& current, const ElementField& previous)
{
  if (current.mesh != previous.mesh || current.size() != previous.size())
    throw std::invalid_argument("estimators live on different meshes");
  std::vector<double> local(current.size());
  for (std::size_t k = 0; k < local.size(); ++k) {
    local[k] = combine_pair(current[k], previous[k]);
  }
  ElementField field(current.mesh, std::move(local));
  const double global = global_norm(field);
  return {std::move(field), global};
}

ElementField previous_estimator_on_current_mesh(const PointField& previous, const MeshPtr& mesh)
{
  return estimate(interpolate(mesh, previous)).local;
}

} // namespace parafem
