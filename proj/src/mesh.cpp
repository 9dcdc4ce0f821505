#include "parafem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace parafem {

ElementGeometry triangle_geometry(Point2 a, Point2 b, Point2 c)
{
  const double area = 0.5 * orient2d(a, b, c);
  if (!(area > 0.0))
    throw MeshError("degenerate or clockwise triangle (area " + std::to_string(area) + ")");
  const Point2 centroid = (1.0 / 3.0) * (a + b + c);
  const double avg_edge = (distance(a, b) + distance(b, c) + distance(c, a)) / 3.0;
  return {area, centroid, avg_edge};
}

namespace {

std::vector<std::array<Index, 3>> sorted_edge_list(const std::vector<Triangle>& elements)
{
  // (low, high, element) for every element edge
  std::vector<std::array<Index, 3>> list;
  list.reserve(3 * elements.size());
  for (std::size_t k = 0; k < elements.size(); ++k) {
    const Triangle& t = elements[k];
    for (int e = 0; e < 3; ++e) {
      Index a = t[e];
      Index b = t[(e + 1) % 3];
      if (a > b)
        std::swap(a, b);
      list.push_back({a, b, static_cast<Index>(k)});
    }
  }
  std::sort(list.begin(), list.end());
  return list;
}

Incidence build_incidence(std::size_t nv, const std::vector<Triangle>& elements)
{
  std::vector<Index> offsets(nv + 1, 0);
  for (const Triangle& t : elements)
    for (Index v : t)
      ++offsets[static_cast<std::size_t>(v) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> cells(static_cast<std::size_t>(offsets.back()));
  std::vector<Index> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t k = 0; k < elements.size(); ++k)
    for (Index v : elements[k])
      cells[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = static_cast<Index>(k);
  return Incidence(std::move(offsets), std::move(cells));
}

} // namespace

Mesh::Mesh(std::vector<Point2> vertices, std::vector<Triangle> elements, DomainPtr domain)
  : vertices_(std::move(vertices)), elements_(std::move(elements)), domain_(std::move(domain))
{
  if (!domain_)
    throw MeshError("mesh requires a domain");
  if (elements_.empty())
    throw MeshError("mesh has no elements");
  const auto nv = static_cast<Index>(vertices_.size());
  areas_.resize(elements_.size());
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    Triangle& t = elements_[k];
    for (Index v : t)
      if (v < 0 || v >= nv)
        throw MeshError("element " + std::to_string(k) + " references vertex out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw MeshError("element " + std::to_string(k) + " repeats a vertex");
    double twice = orient2d(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    if (twice < 0.0) {
      std::swap(t[1], t[2]);
      twice = -twice;
    }
    if (!(twice > 0.0))
      throw MeshError("element " + std::to_string(k) + " has zero area");
    areas_[k] = 0.5 * twice;
  }

  on_boundary_.assign(vertices_.size(), 0);
  const auto edges = sorted_edge_list(elements_);
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j][0] == edges[i][0] && edges[j][1] == edges[i][1])
      ++j;
    if (j - i == 1) {
      on_boundary_[static_cast<std::size_t>(edges[i][0])] = 1;
      on_boundary_[static_cast<std::size_t>(edges[i][1])] = 1;
    }
    i = j;
  }
  for (std::size_t v = 0; v < vertices_.size(); ++v)
    if (on_boundary_[v])
      boundary_.push_back(static_cast<Index>(v));

  node_to_cell_ = build_incidence(vertices_.size(), elements_);
}

std::array<Point2, 3> Mesh::basis_gradients(std::size_t k) const
{
  const auto p = corners(k);
  const double inv = 1.0 / (2.0 * areas_[k]);
  std::array<Point2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point2 pj = p[(i + 1) % 3];
    const Point2 pk = p[(i + 2) % 3];
    g[i] = {(pj.y - pk.y) * inv, (pk.x - pj.x) * inv};
  }
  return g;
}

ElementGeometry element_geometry(const Mesh& mesh, std::size_t k)
{
  if (k >= mesh.num_elements())
    throw std::out_of_range("element index " + std::to_string(k) + " out of range");
  const auto p = mesh.corners(k);
  return triangle_geometry(p[0], p[1], p[2]);
}

Incidence node_to_cell(const Mesh& mesh) { return mesh.node_to_cell(); }

std::vector<std::array<Index, 2>> mesh_edges(const Mesh& mesh)
{
  const auto list = sorted_edge_list(mesh.elements());
  std::vector<std::array<Index, 2>> edges;
  edges.reserve(list.size() / 2 + 1);
  for (const auto& e : list)
    if (edges.empty() || edges.back()[0] != e[0] || edges.back()[1] != e[1])
      edges.push_back({e[0], e[1]});
  return edges;
}

ConformityReport check_conformity(const Mesh& mesh)
{
  ConformityReport report;
  auto fail = [&](const std::string& msg) {
    report.ok = false;
    report.message = msg;
    return report;
  };

  const PolygonDomain& domain = mesh.domain();
  const double tol = 1e-10 * domain.diameter();
  const auto& v = mesh.vertices();

  const auto list = sorted_edge_list(mesh.elements());
  for (std::size_t i = 0; i < list.size();) {
    std::size_t j = i;
    while (j < list.size() && list[j][0] == list[i][0] && list[j][1] == list[i][1])
      ++j;
    const Index a = list[i][0];
    const Index b = list[i][1];
    if (j - i > 2)
      return fail("edge (" + std::to_string(a) + "," + std::to_string(b) + ") shared by " +
                  std::to_string(j - i) + " elements");
    if (j - i == 1) {
      // A boundary edge must lie on the domain boundary; an interior one
      // signals a hanging node or a hole.
      const Point2 mid = 0.5 * (v[a] + v[b]);
      if (!domain.on_boundary(v[a], tol) || !domain.on_boundary(v[b], tol) ||
          !domain.on_boundary(mid, tol))
        return fail("edge (" + std::to_string(a) + "," + std::to_string(b) +
                    ") belongs to one element but is not on the domain boundary");
      if (!mesh.is_boundary(a) || !mesh.is_boundary(b))
        return fail("boundary edge endpoint missing from boundary set");
    }
    i = j;
  }

  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    if (mesh.node_to_cell().count(i) == 0)
      return fail("vertex " + std::to_string(i) + " belongs to no element");

  double total = 0.0;
  for (double a : mesh.areas()) {
    if (!(a > 0.0))
      return fail("non-positive element area");
    total += a;
  }
  if (std::abs(total - domain.area()) > 1e-10 * domain.area())
    return fail("element areas sum to " + std::to_string(total) + ", domain area is " +
                std::to_string(domain.area()));
  return report;
}

MeshPtr structured_rectangle_mesh(double x0, double y0, double x1, double y1, int nx, int ny)
{
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("structured mesh needs nx, ny >= 1");
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      pts.push_back({x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny});
  auto id = [nx](int i, int j) { return static_cast<Index>(j * (nx + 1) + i); };
  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  auto domain = std::make_shared<const PolygonDomain>(PolygonDomain::rectangle(x0, y0, x1, y1));
  return make_mesh(std::move(pts), std::move(tris), std::move(domain));
}

MeshPtr ear_clip(DomainPtr domain)
{
  const auto& poly = domain->boundary();
  std::vector<Index> ring(poly.size());
  std::iota(ring.begin(), ring.end(), 0);
  std::vector<Triangle> tris;

  auto is_ear = [&](std::size_t i) {
    const std::size_t n = ring.size();
    const Index a = ring[(i + n - 1) % n];
    const Index b = ring[i];
    const Index c = ring[(i + 1) % n];
    if (orient2d(poly[a], poly[b], poly[c]) <= 0.0)
      return false;
    for (Index r : ring) {
      if (r == a || r == b || r == c)
        continue;
      const Point2 p = poly[r];
      if (orient2d(poly[a], poly[b], p) >= 0.0 && orient2d(poly[b], poly[c], p) >= 0.0 &&
          orient2d(poly[c], poly[a], p) >= 0.0)
        return false;
    }
    return true;
  };

  while (ring.size() > 3) {
    // Clip the ear with the best shape (largest minimum angle proxy) so
    // convex polygons do not produce fans of slivers.
    std::size_t best = ring.size();
    double best_quality = -1.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (!is_ear(i))
        continue;
      const std::size_t n = ring.size();
      const Point2 a = poly[ring[(i + n - 1) % n]];
      const Point2 b = poly[ring[i]];
      const Point2 c = poly[ring[(i + 1) % n]];
      const double l2 = dot(a - b, a - b) + dot(b - c, b - c) + dot(c - a, c - a);
      const double quality = orient2d(a, b, c) / l2;
      if (quality > best_quality) {
        best_quality = quality;
        best = i;
      }
    }
    if (best == ring.size())
      throw MeshError("ear clipping failed (polygon not simple?)");
    const std::size_t n = ring.size();
    tris.push_back({ring[(best + n - 1) % n], ring[best], ring[(best + 1) % n]});
    ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(best));
  }
  tris.push_back({ring[0], ring[1], ring[2]});
  return make_mesh(poly, std::move(tris), std::move(domain));
}

std::array<double, 3> barycentric(const std::array<Point2, 3>& tri, Point2 p)
{
  const double det = orient2d(tri[0], tri[1], tri[2]);
  const double l1 = orient2d(p, tri[1], tri[2]) / det;
  const double l2 = orient2d(tri[0], p, tri[2]) / det;
  return {l1, l2, 1.0 - l1 - l2};
}

PointLocator::PointLocator(MeshPtr mesh) : mesh_(std::move(mesh))
{
  const auto box = mesh_->domain().bounding_box();
  lo_ = box[0];
  const double w = std::max(box[1].x - box[0].x, 1e-300);
  const double h = std::max(box[1].y - box[0].y, 1e-300);
  const double n = std::max<double>(1.0, std::sqrt(static_cast<double>(mesh_->num_elements())));
  cell_ = std::max(w, h) / n;
  nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));
  buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
  for (std::size_t k = 0; k < mesh_->num_elements(); ++k) {
    const auto p = mesh_->corners(k);
    double xmin = p[0].x, xmax = p[0].x, ymin = p[0].y, ymax = p[0].y;
    for (const Point2& q : p) {
      xmin = std::min(xmin, q.x);
      xmax = std::max(xmax, q.x);
      ymin = std::min(ymin, q.y);
      ymax = std::max(ymax, q.y);
    }
    const int i0 = std::clamp(static_cast<int>((xmin - lo_.x) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((xmax - lo_.x) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((ymin - lo_.y) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((ymax - lo_.y) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<Index>(k));
  }
}

std::optional<PointLocator::Hit> PointLocator::locate(Point2 p) const
{
  const int i = std::clamp(static_cast<int>((p.x - lo_.x) / cell_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((p.y - lo_.y) / cell_), 0, ny_ - 1);
  constexpr double tol = 1e-12;
  std::optional<Hit> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (Index k : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
    const auto bary = barycentric(mesh_->corners(static_cast<std::size_t>(k)), p);
    const double m = std::min({bary[0], bary[1], bary[2]});
    if (m >= 0.0)
      return Hit{k, bary};
    if (m > best_min) {
      best_min = m;
      best = Hit{k, bary};
    }
  }
  if (best && best_min >= -tol)
    return best;
  return std::nullopt;
}

} // namespace parafem
