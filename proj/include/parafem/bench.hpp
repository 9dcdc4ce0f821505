#pragma once

#include "parafem/adapt.hpp"
#include "parafem/fem.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace parafem {

using SpaceTimeGradient = std::function<Point2(Point2, double)>;

/// Heat problem on [-1,1]^2 with a known solution, its gradient and the
/// matching source f = u_t - Laplace(u).
struct ManufacturedCase
{
  std::string name;
  SpaceTimeFunction u;
  SpaceTimeGradient grad;
  SpaceTimeFunction f;
  double etol = 0.01;
  double tau = 0.01;
  /// Initial uniform mesh size giving a first-iteration NOV near the
  /// published one.
  double initial_h = 0.3;
  DomainPtr domain;

  /// Problem with u0 = u(., 0) and g = u on the boundary.
  ParabolicProblem problem(double t_end) const;
};

/// rotation, diffusion or splitting; std::invalid_argument otherwise.
ManufacturedCase make_case(const std::string& name);
std::vector<std::string> case_names();

/// u = sin(pi x) sin(pi y) exp(-t) on the unit square.
ManufacturedCase smooth_heat_case();

/// eta / error; std::invalid_argument when the error is not positive.
double efficiency_index(double eta, double error);

/// Least-squares slope of log(error) against log(N).
double convergence_slope(std::span<const std::pair<double, double>> points);

struct ReportRow
{
  int step = 0;
  int k = 0;
  std::size_t nov = 0;
  double grad_error = 0.0;
  double eta = 0.0;
  double eff_index = 0.0;
};

struct ConvergenceReport
{
  std::vector<ReportRow> rows;
  /// Slope over the final iteration of every time step.
  std::optional<double> final_slope;
  /// Slope over every iteration of every step with a known error.
  std::optional<double> all_slope;
};

ConvergenceReport make_report(std::span<const IterationRecord> iterations);

/// report.csv, error/estimator plot data (.dat) and an SVG log-log plot in
/// `dir`.
void write_report(const ConvergenceReport& report, const std::filesystem::path& dir);

/// Log-log line plot of (N, value) series.
struct PlotSeries
{
  std::string label;
  std::vector<std::pair<double, double>> points;
};
void write_svg_loglog(const std::vector<PlotSeries>& series, const std::string& title,
                      const std::filesystem::path& path);

} // namespace parafem
