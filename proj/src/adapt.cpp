#include "parafem/adapt.hpp"

#include "parafem/recovery.hpp"
#include "parafem/sizefield.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

namespace parafem {

PowerLawFit fit_power_law(std::span<const PowerLawSample> samples)
{
  if (samples.size() < 2)
    throw std::invalid_argument("power-law fit needs at least two samples");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    if (!(s.eta > 0.0) || !(s.nov > 0.0))
      throw std::invalid_argument("power-law samples must be positive");
    const double x = std::log(s.nov);
    const double y = std::log(s.eta);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(samples.size());
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 1e-12 * std::max(1.0, n * sxx)))
    throw std::invalid_argument("power-law fit is singular (all N equal)");
  const double slope = (n * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / n;
  PowerLawFit fit{std::exp(intercept), -slope, 0.0};
  double rss = 0.0;
  for (const auto& s : samples) {
    const double r = std::log(s.eta) - (intercept + slope * std::log(s.nov));
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

std::optional<std::int64_t> predict_nov(const PowerLawFit& fit, double etol)
{
  if (!(etol > 0.0))
    throw std::invalid_argument("tolerance must be positive");
  if (!(fit.p > 0.0) || !(fit.c > 0.0))
    return std::nullopt;
  const double n = std::ceil(std::pow(fit.c / etol, 1.0 / fit.p));
  if (!std::isfinite(n) || n > 9.0e18)
    return std::nullopt;
  return static_cast<std::int64_t>(std::max(n, 1.0));
}

int compute_itero(double target, double previous)
{
  if (!(target > 0.0) || !(previous > 0.0))
    throw std::invalid_argument("vertex counts must be positive");
  const double e = std::ceil(std::log2(target / previous));
  return e < 1.0 ? 1 : static_cast<int>(e);
}

void AdaptConfig::validate() const
{
  if (!(etol > 0.0))
    throw std::invalid_argument("etol must be positive");
  if (!(tau > 0.0))
    throw std::invalid_argument("tau must be positive");
  if (!(t_end >= 0.0))
    throw std::invalid_argument("t_end must be non-negative");
  if (!(theta_r > 0.0 && theta_r <= 1.0))
    throw std::invalid_argument("theta_r must lie in (0, 1]");
  if (max_iters != 7)
    throw std::invalid_argument("the adaptive iteration cap is fixed at 7");
  if (!(initial_h > 0.0))
    throw std::invalid_argument("initial_h must be positive");
  if (!(theta_d > 0.0 && theta_d <= 1.0))
    throw std::invalid_argument("theta_d must lie in (0, 1]");
  if (baseline_max_iters < 1 || warm_adam_epochs < 0)
    throw std::invalid_argument("iteration caps must be positive");
  if (!(solver.tol > 0.0))
    throw std::invalid_argument("solver tolerance must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int num_steps(const AdaptConfig& cfg)
{
  return static_cast<int>(std::floor(cfg.t_end / cfg.tau + 1e-9));
}

double gradient_error(const ParabolicProblem& problem, const FeFunction& uh, double t)
{
  if (!problem.exact_gradient)
    return std::numeric_limits<double>::quiet_NaN();
  const auto& grad = *problem.exact_gradient;
  return integrate_gradient_error(uh, [&](Point2 p) { return grad(p, t); });
}

/// Shared body of the initial loop and adapt_step.
template <class SolveFn>
AdaptResult adaptive_loop(AdaptContext& ctx, int step, double t, SolveFn&& solve)
{
  const auto t_step = Clock::now();
  const AdaptConfig& cfg = ctx.config();
  AdaptRecord rec;
  rec.step = step;
  rec.time = t;
  MeshPtr mesh = ctx.initial_mesh();
  std::optional<FeFunction> uh;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    const auto t_it = Clock::now();
    auto [u, est] = solve(mesh);
    if (!std::isfinite(est.global))
      throw std::runtime_error("non-finite error estimator at step " + std::to_string(step));
    IterationRecord it;
    it.step = step;
    it.k = k;
    it.nov = mesh->num_vertices();
    it.eta = est.global;
    it.grad_error = gradient_error(ctx.problem(), u, t);
    uh = std::move(u);

    if (est.global <= cfg.etol || k == cfg.max_iters) {
      rec.reached_tolerance = est.global <= cfg.etol;
      rec.cap_warning = !rec.reached_tolerance;
      it.wall_ms = ms_since(t_it);
      rec.iterations.push_back(it);
      break;
    }

    int itero = 1;
    if (k == 5) {
      std::vector<PowerLawSample> samples;
      for (std::size_t i = 2; i < 4; ++i)
        samples.push_back({rec.iterations[i].eta, static_cast<double>(rec.iterations[i].nov)});
      samples.push_back({it.eta, static_cast<double>(it.nov)});
      try {
        const auto n = predict_nov(fit_power_law(samples), cfg.etol);
        if (n)
          itero = compute_itero(static_cast<double>(*n),
                                static_cast<double>(rec.iterations[3].nov));
      } catch (const std::invalid_argument&) {
        itero = 1;
      }
    }
    it.itero = itero;

    SizeFieldInput in{est.local, element_avg_edges(mesh), itero, 2, cfg.theta_r};
    mesh = generate_mesh(ctx.generator(), size_field(in, mesh));
    it.wall_ms = ms_since(t_it);
    rec.iterations.push_back(it);
  }
  if (rec.cap_warning)
    std::cerr << "parafem: step " << step << " stopped at the iteration cap with eta "
              << rec.iterations.back().eta << " > " << cfg.etol << '\n';
  rec.final_nov = mesh->num_vertices();
  rec.wall_ms = ms_since(t_step);
  return {mesh, std::move(*uh), std::move(rec)};
}

} // namespace

AdaptContext::AdaptContext(const ParabolicProblem& problem, AdaptConfig cfg)
    : AdaptContext(problem, cfg, make_generator(cfg.generator, cfg.gmsh, cfg.max_vertices))
{
}

AdaptContext::AdaptContext(const ParabolicProblem& problem, AdaptConfig cfg,
                           std::unique_ptr<MeshGenerator> generator)
    : problem_(problem), cfg_(std::move(cfg)), generator_(std::move(generator))
{
  cfg_.validate();
  if (!problem_.domain)
    throw std::invalid_argument("problem has no domain");
  initial_ = generate_mesh(*generator_, problem_.domain, cfg_.initial_h);
}

AdaptResult adapt_initial(AdaptContext& ctx)
{
  const auto& problem = ctx.problem();
  const auto& solver = ctx.config().solver;
  return adaptive_loop(ctx, 0, 0.0, [&](const MeshPtr& mesh) {
    FeFunction u = l2_project(mesh, problem.initial, solver);
    Estimate est = estimate(u);
    return std::pair{std::move(u), std::move(est)};
  });
}

AdaptResult adapt_step(AdaptContext& ctx, int step, double t, const SurrogateNet& previous)
{
  const auto& problem = ctx.problem();
  const auto& cfg = ctx.config();
  return adaptive_loop(ctx, step, t, [&](const MeshPtr& mesh) {
    FeFunction u = backward_euler_step(mesh, problem.coefficient, cfg.tau, problem.source, t,
                                       previous, problem.dirichlet, cfg.solver);
    const Estimate cur = estimate(u);
    const ElementField prev = previous_estimator_on_current_mesh(previous, mesh);
    Estimate est = combine_estimators(cur.local, prev);
    return std::pair{std::move(u), std::move(est)};
  });
}

ScalarFunction surrogate_lift(const ParabolicProblem& problem, double t)
{
  if (problem.homogeneous)
    return {};
  DomainPtr domain = problem.domain;
  SpaceTimeFunction g = problem.dirichlet;
  return [domain, g, t](Point2 p) {
    return boundary_blend(*domain, [&](Point2 q) { return g(q, t); }, p);
  };
}

std::vector<AdaptRecord> run(const ParabolicProblem& problem, const AdaptConfig& cfg,
                             const RecordSink& sink)
{
  AdaptContext ctx(problem, cfg);
  std::vector<AdaptRecord> records;
  AdaptResult prev = adapt_initial(ctx);
  records.push_back(prev.record);
  if (sink)
    sink(records.back());

  SurrogateNet net = init_net(cfg.layers, cfg.seed, problem.domain);
  const int steps = num_steps(cfg);
  for (int n = 1; n <= steps; ++n) {
    const auto t0 = Clock::now();
    const double t_prev = (n - 1) * cfg.tau;
    net.set_lift(surrogate_lift(problem, t_prev));
    TrainConfig tc = cfg.train;
    if (n > 1)
      tc.adam_epochs = cfg.warm_adam_epochs;
    const TrainReport rep = train(net, prev.solution, tc);
    if (rep.non_finite)
      throw std::runtime_error("surrogate training diverged at step " + std::to_string(n));

    AdaptResult res = adapt_step(ctx, n, n * cfg.tau, net);
    res.record.training = rep;
    res.record.wall_ms = ms_since(t0);
    records.push_back(res.record);
    if (sink)
      sink(records.back());
    prev = std::move(res);
  }
  return records;
}

std::vector<Index> doerfler_mark(const ElementField& local, double theta)
{
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("marking fraction must lie in (0, 1]");
  double total = 0.0;
  for (double v : local.values)
    total += v * v;
  if (!(total > 0.0))
    return {};
  std::vector<Index> order(local.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return local[static_cast<std::size_t>(a)] > local[static_cast<std::size_t>(b)];
  });
  std::vector<Index> marked;
  double acc = 0.0;
  for (Index k : order) {
    if (acc >= theta * total)
      break;
    marked.push_back(k);
    const double v = local[static_cast<std::size_t>(k)];
    acc += v * v;
  }
  return marked;
}

namespace {

/// Refine-solve loop of the baseline; `solve` maps the current mesh and the
/// nested interpolant of the previous solution (if any) to a new solution.
template <class SolveFn>
AdaptResult baseline_loop(const ParabolicProblem& problem, const AdaptConfig& cfg, int step,
                          double t, MeshPtr mesh, std::optional<FeFunction> previous,
                          const RefinementObserver& observer, SolveFn&& solve)
{
  const auto t_step = Clock::now();
  AdaptRecord rec;
  rec.step = step;
  rec.time = t;
  std::optional<FeFunction> uh;
  for (int k = 1; k <= cfg.baseline_max_iters; ++k) {
    const auto t_it = Clock::now();
    FeFunction u = solve(mesh, previous);
    const Estimate est = estimate(u);
    IterationRecord it;
    it.step = step;
    it.k = k;
    it.nov = mesh->num_vertices();
    it.eta = est.global;
    it.grad_error = gradient_error(problem, u, t);
    uh = std::move(u);
    if (est.global <= cfg.etol || k == cfg.baseline_max_iters) {
      rec.reached_tolerance = est.global <= cfg.etol;
      rec.cap_warning = !rec.reached_tolerance;
      it.wall_ms = ms_since(t_it);
      rec.iterations.push_back(it);
      break;
    }
    const auto marked = doerfler_mark(est.local, cfg.theta_d);
    RefineResult fine = bisect_refine(mesh, marked);
    if (observer)
      observer(step, k, *mesh, *fine.mesh, fine.ancestry);
    if (previous)
      previous = nested_interpolate(*previous, fine.mesh, fine.ancestry);
    mesh = fine.mesh;
    it.itero = 1;
    it.wall_ms = ms_since(t_it);
    rec.iterations.push_back(it);
  }
  rec.final_nov = mesh->num_vertices();
  rec.wall_ms = ms_since(t_step);
  return {mesh, std::move(*uh), std::move(rec)};
}

} // namespace

std::vector<AdaptRecord> run_baseline(const ParabolicProblem& problem, const AdaptConfig& cfg,
                                      const RecordSink& sink, const RefinementObserver& observer)
{
  cfg.validate();
  auto generator = make_generator(cfg.generator, cfg.gmsh, cfg.max_vertices);
  MeshPtr mesh = label_longest_edges(generate_mesh(*generator, problem.domain, cfg.initial_h));
  std::vector<AdaptRecord> records;

  AdaptResult prev = baseline_loop(
    problem, cfg, 0, 0.0, mesh, std::nullopt, observer,
    [&](const MeshPtr& m, const std::optional<FeFunction>&) {
      return l2_project(m, problem.initial, cfg.solver);
    });
  records.push_back(prev.record);
  if (sink)
    sink(records.back());

  const int steps = num_steps(cfg);
  for (int n = 1; n <= steps; ++n) {
    const double t = n * cfg.tau;
    AdaptResult res = baseline_loop(
      problem, cfg, n, t, prev.mesh, prev.solution, observer,
      [&](const MeshPtr& m, const std::optional<FeFunction>& uprev) {
        return backward_euler_step(m, problem.coefficient, cfg.tau, problem.source, t, *uprev,
                                   problem.dirichlet, cfg.solver);
      });
    records.push_back(res.record);
    if (sink)
      sink(records.back());
    prev = std::move(res);
  }
  return records;
}

} // namespace parafem
