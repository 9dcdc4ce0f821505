#pragma once

#include "parafem/fem.hpp"
#include "parafem/generator.hpp"
#include "parafem/refine.hpp"
#include "parafem/surrogate.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace parafem {

struct PowerLawFit
{
  double c = 0.0;
  double p = 0.0;
  /// Root-mean-square residual of the fit in log space.
  double residual = 0.0;
};

struct PowerLawSample
{
  double eta = 0.0;
  double nov = 0.0;
};

/// Least squares for log(eta) = log(c) - p log(N). Throws
/// std::invalid_argument on fewer than two samples, non-positive entries or
/// identical N.
PowerLawFit fit_power_law(std::span<const PowerLawSample> samples);

/// ceil((c / eTol)^(1/p)), or nullopt when p <= 0 (no decreasing trend).
std::optional<std::int64_t> predict_nov(const PowerLawFit& fit, double etol);

/// max(ceil(log2(target / previous)), 1).
int compute_itero(double target, double previous);

struct AdaptConfig
{
  double etol = 0.01;
  double tau = 0.1;
  double t_end = 0.3;
  double theta_r = 0.8;
  int max_iters = 7;
  /// Target edge length of the initial uniform mesh.
  double initial_h = 0.3;
  GeneratorKind generator = GeneratorKind::fallback;
  /// Vertex budget of the fallback generator (0 = none).
  std::size_t max_vertices = 200000;
  GmshOptions gmsh;
  SolverOptions solver;

  std::vector<int> layers{2, 40, 40, 40, 1};
  std::uint64_t seed = 0;
  TrainConfig train;
  /// Adam epoch cap once the network is warm-started.
  int warm_adam_epochs = 2000;

  double theta_d = 0.5;
  int baseline_max_iters = 40;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// One adaptive iteration: estimator, mesh size and the iteRO used to build
/// the next mesh (0 when the loop stopped here).
struct IterationRecord
{
  int step = 0;
  int k = 0;
  std::size_t nov = 0;
  double eta = 0.0;
  int itero = 0;
  double wall_ms = 0.0;
  /// ||grad(u - u_h)|| when an exact gradient is known, else NaN.
  double grad_error = std::numeric_limits<double>::quiet_NaN();
};

struct AdaptRecord
{
  int step = 0;
  double time = 0.0;
  std::vector<IterationRecord> iterations;
  /// Training that produced the surrogate used by this step (empty at step 0
  /// and for the baseline).
  TrainReport training;
  std::size_t final_nov = 0;
  bool reached_tolerance = false;
  /// The iteration cap was hit with the estimator still above tolerance.
  bool cap_warning = false;
  double wall_ms = 0.0;
};

using RecordSink = std::function<void(const AdaptRecord&)>;

/// Result of one adaptive loop.
struct AdaptResult
{
  MeshPtr mesh;
  FeFunction solution;
  AdaptRecord record;
};

/// Shared state of a surrogate-driven run: the fixed initial mesh and generator.
class AdaptContext
{
public:
  AdaptContext(const ParabolicProblem& problem, AdaptConfig cfg);
  AdaptContext(const ParabolicProblem& problem, AdaptConfig cfg,
               std::unique_ptr<MeshGenerator> generator);

  const ParabolicProblem& problem() const { return problem_; }
  const AdaptConfig& config() const { return cfg_; }
  const MeshPtr& initial_mesh() const { return initial_; }
  MeshGenerator& generator() { return *generator_; }

private:
  const ParabolicProblem& problem_;
  AdaptConfig cfg_;
  std::unique_ptr<MeshGenerator> generator_;
  MeshPtr initial_;
};

/// Initial loop: project u0, estimate, stop on tolerance or the cap,
/// otherwise build the next mesh from the size field.
AdaptResult adapt_initial(AdaptContext& ctx);

/// One time step from the initial mesh with the surrogate of the previous
/// solution as data and the two-level estimator.
AdaptResult adapt_step(AdaptContext& ctx, int step, double t, const SurrogateNet& previous);

/// Boundary lift of the Dirichlet data at time t for the surrogate.
ScalarFunction surrogate_lift(const ParabolicProblem& problem, double t);

/// Whole run: initial loop, then per step LEARN (warm-started) and
/// adapt_step. Records are passed to `sink` as they complete.
std::vector<AdaptRecord> run(const ParabolicProblem& problem, const AdaptConfig& cfg,
                             const RecordSink& sink = {});

/// Every baseline refinement: (step, iteration, coarse mesh, refined mesh,
/// ancestry).
using RefinementObserver =
  std::function<void(int, int, const Mesh&, const Mesh&, const Ancestry&)>;

/// Bisection baseline without coarsening: nested interpolation of the
/// previous solution, single-level estimator, Doerfler marking.
std::vector<AdaptRecord> run_baseline(const ParabolicProblem& problem, const AdaptConfig& cfg,
                                      const RecordSink& sink = {},
                                      const RefinementObserver& observer = {});

/// Smallest set of elements, largest first, whose squared estimators reach
/// theta times the total.
std::vector<Index> doerfler_mark(const ElementField& local, double theta);

} // namespace parafem
