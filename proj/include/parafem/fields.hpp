#pragma once

#include "parafem/mesh.hpp"
#include "parafem/quadrature.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace parafem {

struct ElementTag {};
struct VertexTag {};

/// One scalar per element (ElementTag) or per vertex (VertexTag) of a mesh.
template <class Tag>
struct MeshField
{
  MeshPtr mesh;
  std::vector<double> values;

  MeshField() = default;
  MeshField(MeshPtr m, std::vector<double> v) : mesh(std::move(m)), values(std::move(v))
  {
    const std::size_t expected = std::is_same_v<Tag, ElementTag> ? mesh->num_elements()
                                                                  : mesh->num_vertices();
    if (values.size() != expected)
      throw std::invalid_argument("field length does not match mesh");
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

using ElementField = MeshField<ElementTag>;
using VertexField = MeshField<VertexTag>;

/// Anything that can be evaluated at arbitrary points: analytic data, finite
/// element functions, neural surrogates.
class PointField
{
public:
  virtual ~PointField() = default;

  virtual void evaluate(std::span<const Point2> points, std::span<double> out) const = 0;

  /// Values at every quadrature point of every element, element-major.
  virtual void evaluate_at_quadrature(const Mesh& mesh, const QuadratureRule& rule,
                                      std::span<double> out) const;

  double operator()(Point2 p) const
  {
    double v = 0.0;
    evaluate(std::span<const Point2>(&p, 1), std::span<double>(&v, 1));
    return v;
  }
};

using ScalarFunction = std::function<double(Point2)>;
using SpaceTimeFunction = std::function<double(Point2, double)>;
using VectorFunction = std::function<Point2(Point2)>;

class FunctionField final : public PointField
{
public:
  explicit FunctionField(ScalarFunction f) : f_(std::move(f)) {}
  void evaluate(std::span<const Point2> points, std::span<double> out) const override;

private:
  ScalarFunction f_;
};

/// Continuous piecewise-linear function given by its nodal values.
class FeFunction final : public PointField
{
public:
  FeFunction(MeshPtr mesh, Eigen::VectorXd values);

  static FeFunction zero(MeshPtr mesh);

  const MeshPtr& mesh() const { return mesh_; }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  /// Constant gradient on element k.
  Point2 gradient(std::size_t k) const;

  /// Point evaluation through a lazily built locator; points outside the
  /// mesh throw std::out_of_range.
  void evaluate(std::span<const Point2> points, std::span<double> out) const override;
  void evaluate_at_quadrature(const Mesh& mesh, const QuadratureRule& rule,
                              std::span<double> out) const override;

private:
  MeshPtr mesh_;
  Eigen::VectorXd values_;
  mutable std::shared_ptr<const PointLocator> locator_;
};

/// Nodal interpolant of a point-evaluable field.
FeFunction interpolate(const MeshPtr& mesh, const PointField& field);
FeFunction interpolate(const MeshPtr& mesh, const ScalarFunction& f);

} // namespace parafem
