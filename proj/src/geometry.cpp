#include "parafem/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace parafem {

double segment_distance(Point2 p, Point2 a, Point2 b, Point2* closest)
{
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Point2 q = a + t * ab;
  if (closest)
    *closest = q;
  if (t > 0.0 && t < 1.0)
    return std::abs(cross(ab, p - a)) / std::sqrt(len2);
  return distance(p, q);
}

namespace {

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d)
{
  auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };
  const int o1 = sgn(orient2d(a, b, c));
  const int o2 = sgn(orient2d(a, b, d));
  const int o3 = sgn(orient2d(c, d, a));
  const int o4 = sgn(orient2d(c, d, b));
  if (o1 != o2 && o3 != o4)
    return true;
  auto on_seg = [](Point2 p, Point2 q, Point2 r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
           std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
  };
  return (o1 == 0 && on_seg(a, b, c)) || (o2 == 0 && on_seg(a, b, d)) ||
         (o3 == 0 && on_seg(c, d, a)) || (o4 == 0 && on_seg(c, d, b));
}

double signed_area(const std::vector<Point2>& pts)
{
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    s += cross(pts[i], pts[(i + 1) % pts.size()]);
  return 0.5 * s;
}

} // namespace

PolygonDomain::PolygonDomain(std::vector<Point2> boundary)
  : boundary_(std::move(boundary))
{
  const std::size_t n = boundary_.size();
  if (n < 3)
    throw std::invalid_argument("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (boundary_[i] == boundary_[j])
        throw std::invalid_argument("polygon has duplicate vertices");

  // Non-adjacent segments must not touch.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1))
        continue;
      auto [a, b] = segment(i);
      auto [c, d] = segment(j);
      if (segments_intersect(a, b, c, d))
        throw std::invalid_argument("polygon is not simple");
    }
  }
  const double area = signed_area(boundary_);
  if (area == 0.0)
    throw std::invalid_argument("polygon has zero area");
  if (area < 0.0)
    std::reverse(boundary_.begin(), boundary_.end());
}

PolygonDomain PolygonDomain::rectangle(double x0, double y0, double x1, double y1)
{
  return PolygonDomain({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

double PolygonDomain::distance(Point2 p) const
{
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < boundary_.size(); ++i) {
    auto [a, b] = segment(i);
    d = std::min(d, segment_distance(p, a, b));
  }
  return d;
}

bool PolygonDomain::contains(Point2 p) const
{
  bool inside = false;
  for (std::size_t i = 0, j = boundary_.size() - 1; i < boundary_.size(); j = i++) {
    const Point2 a = boundary_[i];
    const Point2 b = boundary_[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xi = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xi)
        inside = !inside;
    }
  }
  return inside || distance(p) == 0.0;
}

double PolygonDomain::area() const { return signed_area(boundary_); }

double PolygonDomain::diameter() const
{
  double d = 0.0;
  for (std::size_t i = 0; i < boundary_.size(); ++i)
    for (std::size_t j = i + 1; j < boundary_.size(); ++j)
      d = std::max(d, parafem::distance(boundary_[i], boundary_[j]));
  return d;
}

std::array<Point2, 2> PolygonDomain::bounding_box() const
{
  Point2 lo = boundary_.front();
  Point2 hi = lo;
  for (const Point2& p : boundary_) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return {lo, hi};
}

double boundary_blend(const PolygonDomain& domain,
                      const std::function<double(Point2)>& g,
                      Point2 p)
{
  double wsum = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < domain.num_segments(); ++i) {
    auto [a, b] = domain.segment(i);
    Point2 q;
    const double d = segment_distance(p, a, b, &q);
    if (d == 0.0)
      return g(q);
    const double w = 1.0 / (d * d);
    wsum += w;
    acc += w * g(q);
  }
  return acc / wsum;
}

} // namespace parafem
