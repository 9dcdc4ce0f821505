#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace parafem {

struct Point2
{
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Twice the signed area of (a, b, c); positive for counter-clockwise order.
inline double orient2d(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

/// Distance from p to the closed segment [a, b], and the closest point on it.
double segment_distance(Point2 p, Point2 a, Point2 b, Point2* closest = nullptr);

/// Simple polygon with counter-clockwise boundary. Clockwise input is reversed
/// on construction; self-intersecting or degenerate input throws
/// std::invalid_argument.
class PolygonDomain
{
public:
  explicit PolygonDomain(std::vector<Point2> boundary);

  static PolygonDomain rectangle(double x0, double y0, double x1, double y1);

  const std::vector<Point2>& boundary() const { return boundary_; }
  std::size_t num_segments() const { return boundary_.size(); }
  std::pair<Point2, Point2> segment(std::size_t i) const
  {
    return {boundary_[i], boundary_[(i + 1) % boundary_.size()]};
  }

  /// Exact distance to the boundary polyline (valid inside and outside).
  double distance(Point2 p) const;
  bool contains(Point2 p) const;

  double area() const;
  double diameter() const;
  std::array<Point2, 2> bounding_box() const;

  /// True if p lies on the boundary within `tol` (absolute).
  bool on_boundary(Point2 p, double tol) const { return distance(p) <= tol; }

private:
  std::vector<Point2> boundary_;
};

using DomainPtr = std::shared_ptr<const PolygonDomain>;

/// Continuous extension of boundary data g into the domain: inverse-square
/// distance blend of g at the closest point of each boundary segment. Equals
/// g exactly on the boundary.
double boundary_blend(const PolygonDomain& domain,
                      const std::function<double(Point2)>& g,
                      Point2 p);

} // namespace parafem
