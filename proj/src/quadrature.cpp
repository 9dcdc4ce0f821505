#include "parafem/quadrature.hpp"

#include <stdexcept>

namespace parafem {

namespace {

void add_orbit3(QuadratureRule& r, double a, double w)
{
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({b, a, a});
  r.points.push_back({a, b, a});
  r.points.push_back({a, a, b});
  r.weights.insert(r.weights.end(), 3, w);
}

QuadratureRule make_centroid()
{
  QuadratureRule r;
  r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(1.0);
  r.degree = 1;
  return r;
}

QuadratureRule make_degree2()
{
  QuadratureRule r;
  add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
  r.degree = 2;
  return r;
}

QuadratureRule make_dunavant4()
{
  QuadratureRule r;
  add_orbit3(r, 0.44594849091596489, 0.22338158967801147);
  add_orbit3(r, 0.091576213509770743, 0.10995174365532187);
  r.degree = 4;
  return r;
}

QuadratureRule make_dunavant5()
{
  QuadratureRule r;
  r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(0.225);
  add_orbit3(r, 0.47014206410511509, 0.13239415278850619);
  add_orbit3(r, 0.10128650732345634, 0.12593918054482715);
  r.degree = 5;
  return r;
}

} // namespace

const QuadratureRule& dunavant4()
{
  static const QuadratureRule rule = make_dunavant4();
  return rule;
}

const QuadratureRule& centroid_rule()
{
  static const QuadratureRule rule = make_centroid();
  return rule;
}

const QuadratureRule& triangle_rule(int degree)
{
  static const QuadratureRule d2 = make_degree2();
  static const QuadratureRule d5 = make_dunavant5();
  switch (degree) {
  case 1: return centroid_rule();
  case 2: return d2;
  case 3:
  case 4: return dunavant4();
  case 5: return d5;
  default: throw std::invalid_argument("no triangle rule of degree " + std::to_string(degree));
  }
}

} // namespace parafem
