#include "parafem/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace parafem {

namespace {

constexpr double pi = std::numbers::pi;

DomainPtr square()
{
  return std::make_shared<const PolygonDomain>(PolygonDomain::rectangle(-1, -1, 1, 1));
}

ManufacturedCase rotation()
{
  constexpr double a = 500.0;
  auto center = [](double t) {
    return Point2{0.3 * std::cos(2 * pi * t), 0.3 * std::sin(2 * pi * t)};
  };
  ManufacturedCase c;
  c.name = "rotation";
  c.u = [=](Point2 p, double t) {
    const Point2 d = p - center(t);
    return std::exp(-a * d.x * d.x) * std::exp(-a * d.y * d.y);
  };
  c.grad = [=](Point2 p, double t) {
    const Point2 d = p - center(t);
    const double u = std::exp(-a * d.x * d.x) * std::exp(-a * d.y * d.y);
    return (-2 * a * u) * d;
  };
  c.f = [=](Point2 p, double t) {
    const Point2 d = p - center(t);
    const double u = std::exp(-a * d.x * d.x) * std::exp(-a * d.y * d.y);
    const Point2 dc{-0.6 * pi * std::sin(2 * pi * t), 0.6 * pi * std::cos(2 * pi * t)};
    const double ut = 2 * a * u * dot(d, dc);
    const double lap = u * (4 * a * a * dot(d, d) - 4 * a);
    return ut - lap;
  };
  c.etol = 0.01;
  c.initial_h = 0.3;
  return c;
}

ManufacturedCase diffusion()
{
  constexpr double b = 5000.0;
  ManufacturedCase c;
  c.name = "diffusion";
  c.u = [=](Point2 p, double t) {
    const double s = norm(p) + 0.3 * t - 0.4;
    return std::exp(-b * s * s);
  };
  c.grad = [=](Point2 p, double t) {
    const double r = norm(p);
    const double s = r + 0.3 * t - 0.4;
    const double u = std::exp(-b * s * s);
    if (u == 0.0 || r == 0.0)
      return Point2{};
    return (-2 * b * s * u / r) * p;
  };
  c.f = [=](Point2 p, double t) {
    const double r = norm(p);
    const double s = r + 0.3 * t - 0.4;
    const double u = std::exp(-b * s * s);
    if (u == 0.0 || r == 0.0)
      return 0.0;
    const double ut = -0.6 * b * s * u;
    const double lap = u * (4 * b * b * s * s - 2 * b - 2 * b * s / r);
    return ut - lap;
  };
  c.etol = 0.05;
  c.initial_h = 0.1;
  return c;
}

ManufacturedCase splitting()
{
  constexpr double k = 300.0;
  auto bump = [=](Point2 p, double m) {
    const double dx = p.x - m;
    return std::exp(-k * (dx * dx + p.y * p.y));
  };
  ManufacturedCase c;
  c.name = "splitting";
  c.u = [=](Point2 p, double t) { return bump(p, 0.3 * t) + bump(p, -0.3 * t); };
  c.grad = [=](Point2 p, double t) {
    Point2 g{};
    for (double m : {0.3 * t, -0.3 * t})
      g = g + (-2 * k * bump(p, m)) * Point2{p.x - m, p.y};
    return g;
  };
  c.f = [=](Point2 p, double t) {
    double f = 0.0;
    for (double sign : {1.0, -1.0}) {
      const double m = sign * 0.3 * t;
      const double u = bump(p, m);
      const double dx = p.x - m;
      const double ut = 0.6 * sign * k * dx * u;
      const double lap = u * (4 * k * k * (dx * dx + p.y * p.y) - 4 * k);
      f += ut - lap;
    }
    return f;
  };
  c.etol = 0.01;
  c.initial_h = 0.3;
  return c;
}

} // namespace

ParabolicProblem ManufacturedCase::problem(double t_end) const
{
  ParabolicProblem p;
  p.domain = domain;
  p.coefficient = Coefficient::constant(1.0);
  p.source = f;
  p.dirichlet = u;
  p.homogeneous = false;
  auto u0 = u;
  p.initial = [u0](Point2 x) { return u0(x, 0.0); };
  p.t_end = t_end;
  p.exact = u;
  p.exact_gradient = grad;
  return p;
}

std::vector<std::string> case_names() { return {"rotation", "diffusion", "splitting"}; }

ManufacturedCase make_case(const std::string& name)
{
  ManufacturedCase c;
  if (name == "rotation")
    c = rotation();
  else if (name == "diffusion")
    c = diffusion();
  else if (name == "splitting")
    c = splitting();
  else
    throw std::invalid_argument("unknown case '" + name +
                                "' (expected rotation, diffusion or splitting)");
  c.tau = 0.01;
  c.domain = square();
  return c;
}

ManufacturedCase smooth_heat_case()
{
  ManufacturedCase c;
  c.name = "smooth";
  c.u = [](Point2 p, double t) {
    return std::sin(pi * p.x) * std::sin(pi * p.y) * std::exp(-t);
  };
  c.grad = [](Point2 p, double t) {
    const double e = pi * std::exp(-t);
    return Point2{e * std::cos(pi * p.x) * std::sin(pi * p.y),
                  e * std::sin(pi * p.x) * std::cos(pi * p.y)};
  };
  c.f = [](Point2 p, double t) {
    return (2 * pi * pi - 1) * std::sin(pi * p.x) * std::sin(pi * p.y) * std::exp(-t);
  };
  c.tau = 1e-4;
  c.domain = std::make_shared<const PolygonDomain>(PolygonDomain::rectangle(0, 0, 1, 1));
  return c;
}

double efficiency_index(double eta, double error)
{
  if (!(error > 0.0))
    throw std::invalid_argument("efficiency index needs a positive error");
  return eta / error;
}

double convergence_slope(std::span<const std::pair<double, double>> points)
{
  if (points.size() < 3)
    throw std::invalid_argument("convergence slope needs at least three points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [n, e] : points) {
    if (!(n > 0.0) || !(e > 0.0))
      throw std::invalid_argument("convergence data must be positive");
    const double x = std::log(n);
    const double y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(points.size());
  const double det = m * sxx - sx * sx;
  if (!(std::abs(det) > 1e-12 * std::max(1.0, m * sxx)))
    throw std::invalid_argument("convergence data has a single N");
  return (m * sxy - sx * sy) / det;
}

ConvergenceReport make_report(std::span<const IterationRecord> iterations)
{
  ConvergenceReport rep;
  std::vector<std::pair<double, double>> all;
  std::vector<std::pair<double, double>> finals;
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    const auto& it = iterations[i];
    ReportRow row{it.step, it.k, it.nov, it.grad_error, it.eta,
                  std::numeric_limits<double>::quiet_NaN()};
    if (it.grad_error > 0.0) {
      row.eff_index = efficiency_index(it.eta, it.grad_error);
      all.emplace_back(static_cast<double>(it.nov), it.grad_error);
      const bool last = i + 1 == iterations.size() || iterations[i + 1].step != it.step;
      if (last)
        finals.emplace_back(static_cast<double>(it.nov), it.grad_error);
    }
    rep.rows.push_back(row);
  }
  auto slope = [](const std::vector<std::pair<double, double>>& pts) -> std::optional<double> {
    try {
      return convergence_slope(pts);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  };
  rep.final_slope = slope(finals);
  rep.all_slope = slope(all);
  return rep;
}

void write_svg_loglog(const std::vector<PlotSeries>& series, const std::string& title,
                      const std::filesystem::path& path)
{
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points)
      if (x > 0 && y > 0) {
        x0 = std::min(x0, std::log10(x));
        x1 = std::max(x1, std::log10(x));
        y0 = std::min(y0, std::log10(y));
        y1 = std::max(y1, std::log10(y));
      }
  if (!(x1 >= x0)) {
    x0 = 0;
    x1 = 1;
    y0 = 0;
    y1 = 1;
  }
  x0 = std::floor(x0);
  x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0);
  y1 = std::max(std::ceil(y1), y0 + 1);

  constexpr double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
  auto px = [&](double x) { return L + (std::log10(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - y0) / (y1 - y0) * (H - T - B); };

  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
      << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(x0); e <= static_cast<int>(x1); ++e) {
    const double x = px(std::pow(10.0, e));
    out << "<text x=\"" << x << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << e
        << "</text>\n";
  }
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    const double y = py(std::pow(10.0, e));
    out << "<text x=\"" << L - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e
        << "</text>\n";
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">NOV</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* col = colors[i % 4];
    out << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
    for (const auto& [x, y] : series[i].points)
      if (x > 0 && y > 0)
        out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    for (const auto& [x, y] : series[i].points)
      if (x > 0 && y > 0)
        out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << col
            << "\"/>\n";
    out << "<text x=\"" << W - R - 10 << "\" y=\"" << T + 18 + 16 * i
        << "\" text-anchor=\"end\" fill=\"" << col << "\">" << series[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

void write_report(const ConvergenceReport& report, const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "report.csv");
  if (!csv)
    throw std::runtime_error("cannot write " + (dir / "report.csv").string());
  csv << "step,k,nov,grad_error,eta_global,eff_index\n" << std::setprecision(10);
  for (const auto& r : report.rows)
    csv << r.step << ',' << r.k << ',' << r.nov << ',' << r.grad_error << ',' << r.eta << ','
        << r.eff_index << '\n';

  PlotSeries err{"|grad(u - u_h)|", {}};
  PlotSeries eta{"eta", {}};
  std::ofstream err_dat(dir / "error_vs_nov.dat");
  std::ofstream eta_dat(dir / "eta_vs_nov.dat");
  err_dat << std::setprecision(10) << "# nov grad_error\n";
  eta_dat << std::setprecision(10) << "# nov eta_global\n";
  for (const auto& r : report.rows) {
    eta_dat << r.nov << ' ' << r.eta << '\n';
    eta.points.emplace_back(static_cast<double>(r.nov), r.eta);
    if (r.grad_error > 0.0) {
      err_dat << r.nov << ' ' << r.grad_error << '\n';
      err.points.emplace_back(static_cast<double>(r.nov), r.grad_error);
    }
  }
  auto by_n = [](PlotSeries& s) { std::ranges::sort(s.points); };
  by_n(err);
  by_n(eta);
  write_svg_loglog({err, eta}, "error and estimator against NOV", dir / "convergence.svg");

  std::ofstream slope(dir / "slope.txt");
  slope << std::setprecision(6);
  slope << "final_iterations "
        << (report.final_slope ? std::to_string(*report.final_slope) : std::string("n/a")) << '\n';
  slope << "all_iterations "
        << (report.all_slope ? std::to_string(*report.all_slope) : std::string("n/a")) << '\n';
}

} // namespace parafem
