#include "parafem/sizefield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace parafem {

ElementField element_avg_edges(const MeshPtr& mesh)
{
  std::vector<double> h(mesh->num_elements());
  for (std::size_t k = 0; k < h.size(); ++k)
    h[k] = element_geometry(*mesh, k).avg_edge;
  return {mesh, std::move(h)};
}

VertexField vertex_averages(const MeshPtr& mesh, const ElementField& field)
{
  if (field.mesh != mesh)
    throw std::invalid_argument("element field lives on a different mesh");
  std::vector<double> out(mesh->num_vertices());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const auto cells = mesh->node_to_cell()[v];
    if (cells.empty())
      throw std::invalid_argument("vertex " + std::to_string(v) + " has no incident element");
    double s = 0.0;
    for (Index k : cells)
      s += field[static_cast<std::size_t>(k)];
    out[v] = s / static_cast<double>(cells.size());
  }
  return {mesh, std::move(out)};
}

VertexField node_density(const VertexField& h, const VertexField& e, int dim)
{
  if (h.size() != e.size())
    throw std::invalid_argument("size and error vectors differ in length");
  std::vector<double> rho(h.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(h[i] > 0.0))
      throw std::invalid_argument("non-positive vertex size at " + std::to_string(i));
    rho[i] = e[i] * e[i] / std::pow(h[i], dim);
  }
  return {h.mesh, std::move(rho)};
}

std::vector<Index> select_marked(const VertexField& rho, double theta_r)
{
  if (!(theta_r > 0.0 && theta_r <= 1.0))
    throw std::invalid_argument("mark ratio must lie in (0, 1]");
  const double total = std::accumulate(rho.values.begin(), rho.values.end(), 0.0);
  if (!(total > 0.0))
    return {};
  std::vector<Index> order(rho.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return rho[static_cast<std::size_t>(a)] > rho[static_cast<std::size_t>(b)];
  });
  const double target = theta_r * total;
  std::vector<Index> marked;
  double acc = 0.0;
  for (Index v : order) {
    if (acc >= target)
      break;
    const double r = rho[static_cast<std::size_t>(v)];
    if (r <= 0.0)
      break;
    marked.push_back(v);
    acc += r;
  }
  return marked;
}

std::vector<double> scale_factors(std::span<const Index> marked, std::size_t num_vertices, int dim)
{
  std::vector<double> s(num_vertices, 1.0);
  if (marked.empty())
    return s;
  const double ratio = static_cast<double>(num_vertices) / static_cast<double>(marked.size());
  const double value = std::pow(ratio + 1.0, -1.0 / dim);
  for (Index v : marked)
    s.at(static_cast<std::size_t>(v)) = value;
  return s;
}

VertexField size_field(const SizeFieldInput& input, const MeshPtr& mesh, double floor_fraction)
{
  if (input.dim != 2 && input.dim != 3)
    throw std::invalid_argument("dimension must be 2 or 3");
  if (input.itero < 1)
    throw std::invalid_argument("iteRO must be a positive integer");
  for (double e : input.estimators.values)
    if (!(e >= 0.0))
      throw std::invalid_argument("estimators must be non-negative");
  for (double h : input.avg_edges.values)
    if (!(h > 0.0))
      throw std::invalid_argument("element edge lengths must be positive");

  const VertexField hv = vertex_averages(mesh, input.avg_edges);
  const VertexField ev = vertex_averages(mesh, input.estimators);
  const VertexField rho = node_density(hv, ev, input.dim);
  const auto marked = select_marked(rho, input.theta_r);
  const auto scale = scale_factors(marked, mesh->num_vertices(), input.dim);

  const double floor = floor_fraction * mesh->domain().diameter();
  std::vector<double> size(mesh->num_vertices());
  for (std::size_t i = 0; i < size.size(); ++i)
    size[i] = std::max(hv[i] * std::pow(scale[i], input.itero), floor);
  return {mesh, std::move(size)};
}

} // namespace parafem
