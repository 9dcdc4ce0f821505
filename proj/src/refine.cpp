#include "parafem/refine.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace parafem {

namespace {

using Edge = std::array<Index, 2>;

Edge make_edge(Index a, Index b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Rotate t so the edge opposite t[0] is the longest (ties: smallest id pair).
Triangle rotate_longest(const std::vector<Point2>& v, Triangle t)
{
  int best = 0;
  double best_len = -1.0;
  Edge best_edge{0, 0};
  for (int i = 0; i < 3; ++i) {
    const Index a = t[(i + 1) % 3];
    const Index b = t[(i + 2) % 3];
    const double len = distance(v[a], v[b]);
    const Edge e = make_edge(a, b);
    const double scale = std::max(len, best_len);
    const bool tie = std::abs(len - best_len) <= 1e-12 * scale;
    if ((!tie && len > best_len) || (tie && e < best_edge)) {
      best = i;
      best_len = len;
      best_edge = e;
    }
  }
  return {t[best], t[(best + 1) % 3], t[(best + 2) % 3]};
}

struct EdgeTable
{
  std::vector<Edge> edges;                    // sorted unique
  std::vector<std::array<Index, 3>> of_elem;  // local edge i is opposite vertex i
  std::vector<std::array<Index, 2>> elems_of; // up to two elements per edge, -1 if none

  explicit EdgeTable(const std::vector<Triangle>& elements)
  {
    std::vector<std::array<Index, 4>> list; // low, high, element, local
    list.reserve(3 * elements.size());
    for (std::size_t k = 0; k < elements.size(); ++k)
      for (int i = 0; i < 3; ++i) {
        const Edge e = make_edge(elements[k][(i + 1) % 3], elements[k][(i + 2) % 3]);
        list.push_back({e[0], e[1], static_cast<Index>(k), i});
      }
    std::sort(list.begin(), list.end());
    of_elem.resize(elements.size());
    for (const auto& item : list) {
      if (edges.empty() || edges.back() != Edge{item[0], item[1]}) {
        edges.push_back({item[0], item[1]});
        elems_of.push_back({-1, -1});
      }
      const auto id = static_cast<Index>(edges.size() - 1);
      of_elem[static_cast<std::size_t>(item[2])][static_cast<std::size_t>(item[3])] = id;
      auto& slot = elems_of.back();
      if (slot[0] < 0)
        slot[0] = item[2];
      else
        slot[1] = item[2];
    }
  }
};

} // namespace

MeshPtr label_longest_edges(const MeshPtr& mesh)
{
  std::vector<Triangle> tris = mesh->elements();
  for (Triangle& t : tris)
    t = rotate_longest(mesh->vertices(), t);
  return make_mesh(mesh->vertices(), std::move(tris), mesh->domain_ptr());
}

RefineResult bisect_refine(const MeshPtr& mesh, std::span<const Index> marked, RefinementEdge rule)
{
  const auto& verts = mesh->vertices();
  std::vector<Triangle> tris = mesh->elements();
  if (rule == RefinementEdge::longest)
    for (Triangle& t : tris)
      t = rotate_longest(verts, t);

  const EdgeTable table(tris);
  std::vector<char> split(table.edges.size(), 0);
  std::deque<Index> queue;

  auto mark_edge = [&](Index e) {
    if (split[static_cast<std::size_t>(e)])
      return;
    split[static_cast<std::size_t>(e)] = 1;
    for (Index k : table.elems_of[static_cast<std::size_t>(e)])
      if (k >= 0)
        queue.push_back(k);
  };

  for (Index k : marked) {
    if (k < 0 || static_cast<std::size_t>(k) >= tris.size())
      throw std::out_of_range("marked element index out of range");
    mark_edge(table.of_elem[static_cast<std::size_t>(k)][0]);
  }
  // Closure: any element with a split edge must split its refinement edge.
  std::size_t guard = 0;
  const std::size_t guard_cap = 64 * (tris.size() + 1);
  while (!queue.empty()) {
    if (++guard > guard_cap)
      throw MeshError("bisection closure did not terminate");
    const auto k = static_cast<std::size_t>(queue.front());
    queue.pop_front();
    const auto& e = table.of_elem[k];
    if (!split[static_cast<std::size_t>(e[0])] &&
        (split[static_cast<std::size_t>(e[1])] || split[static_cast<std::size_t>(e[2])]))
      mark_edge(e[0]);
  }

  RefineResult result;
  Ancestry& anc = result.ancestry;
  anc.coarse_vertices = verts.size();
  std::vector<Point2> fine_verts = verts;
  std::vector<Index> midpoint(table.edges.size(), -1);
  for (std::size_t e = 0; e < table.edges.size(); ++e) {
    if (!split[e])
      continue;
    const Edge& ed = table.edges[e];
    midpoint[e] = static_cast<Index>(fine_verts.size());
    fine_verts.push_back(0.5 * (verts[ed[0]] + verts[ed[1]]));
    anc.midpoint_of.push_back(ed);
  }

  std::vector<Triangle> fine;
  fine.reserve(tris.size() + 2 * anc.midpoint_of.size());
  anc.element_parent.reserve(fine.capacity());
  auto emit = [&](Triangle t, std::size_t parent) {
    fine.push_back(t);
    anc.element_parent.push_back(static_cast<Index>(parent));
  };

  for (std::size_t k = 0; k < tris.size(); ++k) {
    const Triangle& t = tris[k];
    const auto& e = table.of_elem[k];
    const Index m0 = midpoint[static_cast<std::size_t>(e[0])];
    if (m0 < 0) {
      emit(t, k);
      continue;
    }
    const Index v0 = t[0], v1 = t[1], v2 = t[2];
    // Children (m0, v0, v1) and (m0, v2, v0); their refinement edges are the
    // parent's edges (v0, v1) = local edge 2 and (v2, v0) = local edge 1.
    const Index m2 = midpoint[static_cast<std::size_t>(e[2])];
    const Index m1 = midpoint[static_cast<std::size_t>(e[1])];
    if (m2 < 0) {
      emit({m0, v0, v1}, k);
    } else {
      emit({m2, m0, v0}, k);
      emit({m2, v1, m0}, k);
    }
    if (m1 < 0) {
      emit({m0, v2, v0}, k);
    } else {
      emit({m1, m0, v2}, k);
      emit({m1, v0, m0}, k);
    }
  }

  result.mesh = make_mesh(std::move(fine_verts), std::move(fine), mesh->domain_ptr());
  return result;
}

FeFunction nested_interpolate(const FeFunction& coarse, const MeshPtr& fine,
                              const Ancestry& ancestry)
{
  const std::size_t nc = coarse.mesh()->num_vertices();
  if (ancestry.coarse_vertices != nc ||
      ancestry.coarse_vertices + ancestry.midpoint_of.size() != fine->num_vertices())
    throw std::invalid_argument("nested_interpolate: ancestry does not match meshes");
  Eigen::VectorXd v(static_cast<Eigen::Index>(fine->num_vertices()));
  v.head(static_cast<Eigen::Index>(nc)) = coarse.values();
  for (std::size_t i = 0; i < ancestry.midpoint_of.size(); ++i) {
    const Edge& e = ancestry.midpoint_of[i];
    v[static_cast<Eigen::Index>(nc + i)] = 0.5 * (coarse[static_cast<std::size_t>(e[0])] +
                                                  coarse[static_cast<std::size_t>(e[1])]);
  }
  return FeFunction(fine, std::move(v));
}

FallbackResult fallback_refine(const VertexField& size, int max_sweeps, std::size_t max_vertices)
{
  const MeshPtr& guide = size.mesh;
  for (double s : size.values)
    if (!(s > 0.0))
      throw std::invalid_argument("fallback_refine: size field must be positive");

  FallbackResult out;
  MeshPtr current = guide;
  std::vector<Index> root(guide->num_elements());
  std::iota(root.begin(), root.end(), 0);

  // Elements above target with their edge-to-target ratio.
  auto violations = [&](const Mesh& m) {
    std::vector<std::pair<double, Index>> bad;
    for (std::size_t k = 0; k < m.num_elements(); ++k) {
      const auto p = m.corners(k);
      const Point2 c = (1.0 / 3.0) * (p[0] + p[1] + p[2]);
      const double avg = (distance(p[0], p[1]) + distance(p[1], p[2]) + distance(p[2], p[0])) / 3.0;
      const auto r = static_cast<std::size_t>(root[k]);
      const auto bary = barycentric(guide->corners(r), c);
      const Triangle& gt = guide->elements()[r];
      const double target = bary[0] * size.values[static_cast<std::size_t>(gt[0])] +
                            bary[1] * size.values[static_cast<std::size_t>(gt[1])] +
                            bary[2] * size.values[static_cast<std::size_t>(gt[2])];
      if (avg > target)
        bad.emplace_back(avg / target, static_cast<Index>(k));
    }
    return bad;
  };

  for (;;) {
    auto bad = violations(*current);
    if (bad.empty())
      break;
    if (out.sweeps >= max_sweeps) {
      out.remaining_violations = bad.size();
      break;
    }
    std::vector<Index> marked;
    const std::size_t nv = current->num_vertices();
    if (max_vertices > 0 && nv + bad.size() > max_vertices) {
      // Each bisection adds about one vertex plus closure; spend what is left
      // of the budget on the elements furthest above their target.
      std::stable_sort(bad.begin(), bad.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      const std::size_t room = max_vertices > nv ? (max_vertices - nv) / 2 : 0;
      for (std::size_t i = 0; i < std::min(room, bad.size()); ++i)
        marked.push_back(bad[i].second);
      out.budget_exhausted = true;
      out.remaining_violations = bad.size() - marked.size();
      if (marked.empty())
        break;
    } else {
      for (const auto& b : bad)
        marked.push_back(b.second);
    }
    auto refined = bisect_refine(current, marked, RefinementEdge::longest);
    std::vector<Index> new_root(refined.mesh->num_elements());
    for (std::size_t k = 0; k < new_root.size(); ++k)
      new_root[k] = root[static_cast<std::size_t>(refined.ancestry.element_parent[k])];
    root = std::move(new_root);
    current = std::move(refined.mesh);
    ++out.sweeps;
    if (out.budget_exhausted)
      break;
  }
  out.mesh = current;
  return out;
}

} // namespace parafem
