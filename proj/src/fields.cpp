#include "parafem/fields.hpp"

#include <cmath>
#include <string>

namespace parafem {

void PointField::evaluate_at_quadrature(const Mesh& mesh, const QuadratureRule& rule,
                                        std::span<double> out) const
{
  const std::size_t nq = rule.size();
  std::vector<Point2> pts(mesh.num_elements() * nq);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto tri = mesh.corners(k);
    for (std::size_t q = 0; q < nq; ++q)
      pts[k * nq + q] = rule.map(tri, q);
  }
  evaluate(pts, out);
}

void FunctionField::evaluate(std::span<const Point2> points, std::span<double> out) const
{
  for (std::size_t i = 0; i < points.size(); ++i)
    out[i] = f_(points[i]);
}

FeFunction::FeFunction(MeshPtr mesh, Eigen::VectorXd values)
  : mesh_(std::move(mesh)), values_(std::move(values))
{
  if (static_cast<std::size_t>(values_.size()) != mesh_->num_vertices())
    throw std::invalid_argument("FeFunction: " + std::to_string(values_.size()) +
                                " values for " + std::to_string(mesh_->num_vertices()) +
                                " vertices");
  if (!values_.allFinite())
    throw std::invalid_argument("FeFunction: non-finite nodal value");
}

FeFunction FeFunction::zero(MeshPtr mesh)
{
  const auto n = static_cast<Eigen::Index>(mesh->num_vertices());
  return FeFunction(std::move(mesh), Eigen::VectorXd::Zero(n));
}

Point2 FeFunction::gradient(std::size_t k) const
{
  const auto g = mesh_->basis_gradients(k);
  const Triangle& t = mesh_->elements()[k];
  Point2 r{0.0, 0.0};
  for (int i = 0; i < 3; ++i)
    r = r + values_[t[i]] * g[i];
  return r;
}

void FeFunction::evaluate(std::span<const Point2> points, std::span<double> out) const
{
  if (!locator_)
    locator_ = std::make_shared<const PointLocator>(mesh_);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto hit = locator_->locate(points[i]);
    if (!hit)
      throw std::out_of_range("FeFunction: point outside mesh");
    const Triangle& t = mesh_->elements()[static_cast<std::size_t>(hit->element)];
    out[i] = hit->bary[0] * values_[t[0]] + hit->bary[1] * values_[t[1]] +
             hit->bary[2] * values_[t[2]];
  }
}

void FeFunction::evaluate_at_quadrature(const Mesh& mesh, const QuadratureRule& rule,
                                        std::span<double> out) const
{
  if (&mesh != mesh_.get()) {
    PointField::evaluate_at_quadrature(mesh, rule, out);
    return;
  }
  const std::size_t nq = rule.size();
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Triangle& t = mesh.elements()[k];
    for (std::size_t q = 0; q < nq; ++q) {
      const auto& b = rule.points[q];
      out[k * nq + q] = b[0] * values_[t[0]] + b[1] * values_[t[1]] + b[2] * values_[t[2]];
    }
  }
}

FeFunction interpolate(const MeshPtr& mesh, const PointField& field)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh->num_vertices()));
  field.evaluate(mesh->vertices(), std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
  return FeFunction(mesh, std::move(v));
}

FeFunction interpolate(const MeshPtr& mesh, const ScalarFunction& f)
{
  return interpolate(mesh, FunctionField(f));
}

} // namespace parafem
