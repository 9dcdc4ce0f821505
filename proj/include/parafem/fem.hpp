#pragma once

#include "parafem/fields.hpp"
#include "parafem/mesh.hpp"
#include "parafem/quadrature.hpp"

#include <Eigen/Sparse>

#include <optional>
#include <string>

namespace parafem {

/// Row-compressed sparse matrix for the assembled operators.
using SparseSystem = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Positive scalar diffusion coefficient with its stated bounds.
struct Coefficient
{
  ScalarFunction a = [](Point2) { return 1.0; };
  double lower = 1.0;
  double upper = 1.0;

  static Coefficient constant(double value) { return {[value](Point2) { return value; }, value, value}; }
};

/// u_t - div(a grad u) = f on a polygon, u = g on the boundary, u(0) = u0.
struct ParabolicProblem
{
  DomainPtr domain;
  Coefficient coefficient;
  SpaceTimeFunction source = [](Point2, double) { return 0.0; };
  SpaceTimeFunction dirichlet = [](Point2, double) { return 0.0; };
  bool homogeneous = true;
  ScalarFunction initial = [](Point2) { return 0.0; };
  double t_end = 1.0;
  std::optional<SpaceTimeFunction> exact;
  std::optional<std::function<Point2(Point2, double)>> exact_gradient;
};

/// Local P1 mass matrix (area/12)[[2,1,1],[1,2,1],[1,1,2]].
std::array<std::array<double, 3>, 3> local_mass(double area);
/// Local P1 stiffness a * area * grad(phi_i).grad(phi_j).
std::array<std::array<double, 3>, 3> local_stiffness(const std::array<Point2, 3>& grads,
                                                     double area, double a);

SparseSystem assemble_mass(const Mesh& mesh);

/// Stiffness with the coefficient sampled at element centroids. Throws
/// std::invalid_argument on a non-positive sample.
SparseSystem assemble_stiffness(const Mesh& mesh, const ScalarFunction& a);

/// b_i = integral of w * phi_i with the given rule.
Eigen::VectorXd load_vector(const Mesh& mesh, const PointField& w,
                            const QuadratureRule& rule = dunavant4());

/// Symmetric elimination of Dirichlet rows/columns: the lifting of the
/// prescribed values moves to the right-hand side, eliminated rows become
/// identity rows.
void apply_dirichlet(SparseSystem& system, Eigen::VectorXd& rhs,
                     const std::vector<Index>& nodes, const Eigen::VectorXd& values);

enum class SolverKind
{
  cg,
  direct,
};

struct SolverOptions
{
  SolverKind kind = SolverKind::cg;
  double tol = 1e-10;
};

SolverKind parse_solver_kind(const std::string& s);

struct SolveReport
{
  Eigen::VectorXd x;
  /// Relative residual |b - Ax| / |b| (0 for a zero right-hand side).
  double residual = 0.0;
  int iterations = 0;
};

/// Diagonal-preconditioned conjugate gradients (cap 10 n iterations) or a
/// sparse LDL^T factorization. Throws SolverError when CG hits its cap.
SolveReport solve_spd(const SparseSystem& system, const Eigen::VectorXd& rhs,
                      const SolverOptions& options = {});

/// L2 projection onto the P1 space of the mesh.
FeFunction l2_project(const MeshPtr& mesh, const PointField& w, const SolverOptions& options = {});
FeFunction l2_project(const MeshPtr& mesh, const ScalarFunction& w, const SolverOptions& options = {});

/// One backward-Euler step on `mesh`:
///   (M + tau A) u = tau F + B,  F_i = (f(., t), phi_i),  B_i = (previous, phi_i)
/// with both loads integrated by the degree-4 rule and u = g(., t) imposed at
/// boundary vertices.
FeFunction backward_euler_step(const MeshPtr& mesh, const Coefficient& a, double tau,
                               const SpaceTimeFunction& f, double t, const PointField& previous,
                               const SpaceTimeFunction& g, const SolverOptions& options = {},
                               SolveReport* report = nullptr);

/// ||grad u - grad u_h|| over the mesh by the degree-4 rule.
double integrate_gradient_error(const FeFunction& uh, const VectorFunction& grad_exact);
/// ||u - u_h|| over the mesh by the degree-4 rule.
double integrate_l2_error(const FeFunction& uh, const ScalarFunction& exact);

/// ||v||_M = sqrt(v^T M v).
double mass_norm(const FeFunction& v);

} // namespace parafem
