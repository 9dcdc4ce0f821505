#include "parafem/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>

namespace parafem {

std::array<std::array<double, 3>, 3> local_mass(double area)
{
  const double d = area / 6.0;
  const double o = area / 12.0;
  return {{{d, o, o}, {o, d, o}, {o, o, d}}};
}

std::array<std::array<double, 3>, 3> local_stiffness(const std::array<Point2, 3>& grads,
                                                     double area, double a)
{
  std::array<std::array<double, 3>, 3> k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      k[i][j] = a * area * dot(grads[i], grads[j]);
  return k;
}

namespace {

template <class LocalFn>
SparseSystem assemble(const Mesh& mesh, LocalFn&& local)
{
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.num_elements());
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto m = local(k);
    const Triangle& t = mesh.elements()[k];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(t[i], t[j], m[i][j]);
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  SparseSystem s(n, n);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

} // namespace

SparseSystem assemble_mass(const Mesh& mesh)
{
  return assemble(mesh, [&](std::size_t k) { return local_mass(mesh.area(k)); });
}

SparseSystem assemble_stiffness(const Mesh& mesh, const ScalarFunction& a)
{
  return assemble(mesh, [&](std::size_t k) {
    const auto p = mesh.corners(k);
    const double ak = a((1.0 / 3.0) * (p[0] + p[1] + p[2]));
    if (!(ak > 0.0))
      throw std::invalid_argument("diffusion coefficient must be positive (got " +
                                  std::to_string(ak) + ")");
    return local_stiffness(mesh.basis_gradients(k), mesh.area(k), ak);
  });
}

Eigen::VectorXd load_vector(const Mesh& mesh, const PointField& w, const QuadratureRule& rule)
{
  const std::size_t nq = rule.size();
  std::vector<double> vals(mesh.num_elements() * nq);
  w.evaluate_at_quadrature(mesh, rule, vals);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Triangle& t = mesh.elements()[k];
    const double area = mesh.area(k);
    for (std::size_t q = 0; q < nq; ++q) {
      const double v = vals[k * nq + q];
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite value at a quadrature point");
      const double wq = rule.weights[q] * area * v;
      for (int i = 0; i < 3; ++i)
        b[t[i]] += wq * rule.points[q][static_cast<std::size_t>(i)];
    }
  }
  return b;
}

void apply_dirichlet(SparseSystem& system, Eigen::VectorXd& rhs, const std::vector<Index>& nodes,
                     const Eigen::VectorXd& values)
{
  const auto n = system.rows();
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    fixed[static_cast<std::size_t>(nodes[i])] = 1;
    g[nodes[i]] = values[static_cast<Eigen::Index>(i)];
  }
  rhs -= system * g;
  for (Eigen::Index r = 0; r < n; ++r) {
    const bool row_fixed = fixed[static_cast<std::size_t>(r)] != 0;
    for (SparseSystem::InnerIterator it(system, r); it; ++it) {
      const bool col_fixed = fixed[static_cast<std::size_t>(it.col())] != 0;
      if (row_fixed || col_fixed)
        it.valueRef() = (it.col() == r) ? 1.0 : 0.0;
    }
    if (row_fixed)
      rhs[r] = g[r];
  }
}

SolverKind parse_solver_kind(const std::string& s)
{
  if (s == "cg")
    return SolverKind::cg;
  if (s == "direct")
    return SolverKind::direct;
  throw std::invalid_argument("unknown solver kind '" + s + "' (expected cg or direct)");
}

SolveReport solve_spd(const SparseSystem& system, const Eigen::VectorXd& rhs,
                      const SolverOptions& options)
{
  SolveReport rep;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    rep.x = Eigen::VectorXd::Zero(rhs.size());
    return rep;
  }
  if (options.kind == SolverKind::direct) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(Eigen::SparseMatrix<double>(system));
    if (ldlt.info() != Eigen::Success)
      throw SolverError("sparse LDL^T factorization failed");
    rep.x = ldlt.solve(rhs);
  } else {
    Eigen::ConjugateGradient<SparseSystem, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
      cg;
    cg.setTolerance(options.tol);
    cg.setMaxIterations(10 * static_cast<Eigen::Index>(rhs.size()));
    cg.compute(system);
    rep.x = cg.solve(rhs);
    rep.iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success)
      throw SolverError("conjugate gradients reached the iteration cap (residual " +
                        std::to_string(cg.error()) + ")");
  }
  rep.residual = (rhs - system * rep.x).norm() / bnorm;
  if (!rep.x.allFinite())
    throw SolverError("linear solve produced non-finite values");
  return rep;
}

FeFunction l2_project(const MeshPtr& mesh, const PointField& w, const SolverOptions& options)
{
  const SparseSystem m = assemble_mass(*mesh);
  const Eigen::VectorXd b = load_vector(*mesh, w);
  return FeFunction(mesh, solve_spd(m, b, options).x);
}

FeFunction l2_project(const MeshPtr& mesh, const ScalarFunction& w, const SolverOptions& options)
{
  return l2_project(mesh, FunctionField(w), options);
}

FeFunction backward_euler_step(const MeshPtr& mesh, const Coefficient& a, double tau,
                               const SpaceTimeFunction& f, double t, const PointField& previous,
                               const SpaceTimeFunction& g, const SolverOptions& options,
                               SolveReport* report)
{
  if (!(tau > 0.0))
    throw std::invalid_argument("time step must be positive");
  SparseSystem system = assemble_mass(*mesh);
  system += tau * assemble_stiffness(*mesh, a.a);

  Eigen::VectorXd rhs = tau * load_vector(*mesh, FunctionField([&](Point2 p) { return f(p, t); }));
  rhs += load_vector(*mesh, previous);

  const auto& bnd = mesh->boundary_vertices();
  Eigen::VectorXd gvals(static_cast<Eigen::Index>(bnd.size()));
  for (std::size_t i = 0; i < bnd.size(); ++i)
    gvals[static_cast<Eigen::Index>(i)] = g(mesh->vertices()[static_cast<std::size_t>(bnd[i])], t);
  apply_dirichlet(system, rhs, bnd, gvals);

  SolveReport rep = solve_spd(system, rhs, options);
  FeFunction u(mesh, rep.x);
  if (report)
    *report = std::move(rep);
  return u;
}

double integrate_gradient_error(const FeFunction& uh, const VectorFunction& grad_exact)
{
  const Mesh& mesh = *uh.mesh();
  const QuadratureRule& rule = dunavant4();
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Point2 gh = uh.gradient(k);
    const auto tri = mesh.corners(k);
    double local = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point2 d = grad_exact(rule.map(tri, q)) - gh;
      local += rule.weights[q] * dot(d, d);
    }
    sum += local * mesh.area(k);
  }
  return std::sqrt(sum);
}

double integrate_l2_error(const FeFunction& uh, const ScalarFunction& exact)
{
  const Mesh& mesh = *uh.mesh();
  const QuadratureRule& rule = dunavant4();
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto tri = mesh.corners(k);
    const Triangle& t = mesh.elements()[k];
    double local = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& b = rule.points[q];
      const double vh = b[0] * uh[t[0]] + b[1] * uh[t[1]] + b[2] * uh[t[2]];
      const double d = exact(rule.map(tri, q)) - vh;
      local += rule.weights[q] * d * d;
    }
    sum += local * mesh.area(k);
  }
  return std::sqrt(sum);
}

double mass_norm(const FeFunction& v)
{
  const SparseSystem m = assemble_mass(*v.mesh());
  return std::sqrt(v.values().dot(m * v.values()));
}

} // namespace parafem
