#include "doctest.h"

#include "parafem/generator.hpp"
#include "parafem/mesh.hpp"
#include "parafem/mesh_io.hpp"
#include "parafem/quadrature.hpp"
#include "parafem/refine.hpp"
#include "parafem/sizefield.hpp"
#include "support.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace parafem;
using namespace parafem::testing;
using doctest::Approx;

namespace {

const char* kTwoTriangleMsh22 = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 15 2 0 1 1
2 1 2 0 1 1 2
3 1 2 0 2 2 3
4 1 2 0 3 3 4
5 2 2 0 1 1 2 3
6 2 2 0 1 1 3 4
$EndElements
)";

const char* kTwoTriangleMsh41 = R"($MeshFormat
4.1 0 8
$EndMeshFormat
$Entities
0 0 1 0
1 0 0 0 1 1 0 0 0
$EndEntities
$Nodes
1 4 1 4
2 1 0 4
1
2
3
4
0 0 0
1 0 0
1 1 0
0 1 0
$EndNodes
$Elements
1 2 1 2
2 1 2 2
1 1 2 3
2 1 3 4
$EndElements
)";

std::set<Index> as_set(std::span<const Index> s) { return {s.begin(), s.end()}; }

int count_records(const std::string& text, const std::string& tag)
{
  int n = 0;
  for (auto pos = text.find(tag); pos != std::string::npos; pos = text.find(tag, pos + 1))
    ++n;
  return n;
}

} // namespace

TEST_CASE("element geometry of closed-form triangles")
{
  auto g = triangle_geometry({0, 0}, {1, 0}, {0, 1});
  CHECK(g.area == Approx(0.5));
  CHECK(g.centroid.x == Approx(1.0 / 3));
  CHECK(g.centroid.y == Approx(1.0 / 3));
  CHECK(g.avg_edge == Approx((2 + std::sqrt(2.0)) / 3).epsilon(1e-14));
  CHECK(g.avg_edge == Approx(1.13807).epsilon(1e-5));

  auto e = triangle_geometry({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2});
  CHECK(e.area == Approx(std::sqrt(3.0) / 4));
  CHECK(e.avg_edge == Approx(1.0));

  CHECK_THROWS_AS(triangle_geometry({0, 0}, {1, 1}, {2, 2}), MeshError);
  CHECK_THROWS_AS(element_geometry(*two_triangle_square(), 2), std::out_of_range);
}

TEST_CASE("node_to_cell on the two-triangle square and a single triangle")
{
  auto mesh = two_triangle_square();
  auto inc = node_to_cell(*mesh);
  REQUIRE(inc.size() == 4);
  CHECK(as_set(inc[0]) == std::set<Index>{0, 1});
  CHECK(as_set(inc[1]) == std::set<Index>{0});
  CHECK(as_set(inc[2]) == std::set<Index>{0, 1});
  CHECK(as_set(inc[3]) == std::set<Index>{1});

  auto dom = std::make_shared<const PolygonDomain>(std::vector<Point2>{{0, 0}, {1, 0}, {0, 1}});
  auto single = make_mesh({{0, 0}, {1, 0}, {0, 1}}, {Triangle{0, 1, 2}}, dom);
  auto inc1 = node_to_cell(*single);
  for (std::size_t v = 0; v < 3; ++v)
    CHECK(as_set(inc1[v]) == std::set<Index>{0});
}

TEST_CASE("node_to_cell matches a brute-force scan on random meshes")
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto mesh = random_mesh(rng);
    auto inc = node_to_cell(*mesh);
    REQUIRE(inc.size() == mesh->num_vertices());
    for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
      std::set<Index> brute;
      for (std::size_t k = 0; k < mesh->num_elements(); ++k)
        for (Index i : mesh->elements()[k])
          if (i == static_cast<Index>(v))
            brute.insert(static_cast<Index>(k));
      CHECK(as_set(inc[v]) == brute);
      CHECK(inc.count(v) == brute.size());
    }
    CHECK(check_conformity(*mesh).ok);
  }
}

TEST_CASE("mesh construction normalizes orientation and rejects bad input")
{
  auto cw = make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {Triangle{0, 2, 1}, Triangle{0, 3, 2}},
                      unit_square());
  for (std::size_t k = 0; k < cw->num_elements(); ++k)
    CHECK(cw->area(k) > 0.0);
  CHECK(check_conformity(*cw).ok);
  CHECK(cw->boundary_vertices().size() == 4);

  CHECK_THROWS(make_mesh({{0, 0}, {1, 0}, {1, 1}}, {Triangle{0, 1, 5}}, unit_square()));
  CHECK_THROWS(make_mesh({{0, 0}, {1, 0}, {1, 1}}, {Triangle{0, 1, 1}}, unit_square()));
  CHECK_THROWS(make_mesh({{0, 0}, {1, 0}, {2, 0}}, {Triangle{0, 1, 2}}, unit_square()));
}

TEST_CASE("conformity checker detects a hanging node")
{
  // Left half split at the midpoint of the shared edge, right half not.
  auto mesh = make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}},
                        {Triangle{0, 1, 2}, Triangle{0, 4, 3}, Triangle{4, 2, 3}}, unit_square());
  CHECK_FALSE(check_conformity(*mesh).ok);
  CHECK(check_conformity(*two_triangle_square()).ok);
}

TEST_CASE("boundary distance of the centered square")
{
  auto dom = centered_square();
  CHECK(dom->distance({0.2, -0.4}) == Approx(0.6));
  CHECK(dom->distance({1, 0.3}) == 0.0);
  CHECK(dom->distance({0, 0}) == Approx(1.0));
  CHECK(dom->distance({3, 0}) == Approx(2.0));
}

TEST_CASE("boundary distance is zero on the boundary and 1-Lipschitz")
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0), box(-2.0, 2.0);
  auto dom = std::make_shared<const PolygonDomain>(
    std::vector<Point2>{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  for (int i = 0; i < 500; ++i) {
    auto [a, b] = dom->segment(static_cast<std::size_t>(i) % dom->num_segments());
    const double s = u(rng);
    const Point2 p = a + s * (b - a);
    CHECK(dom->distance(p) <= 1e-15);
  }
  for (int i = 0; i < 2000; ++i) {
    const Point2 x{box(rng), box(rng)}, y{box(rng), box(rng)};
    CHECK(std::abs(dom->distance(x) - dom->distance(y)) <= distance(x, y) + 1e-12);
  }
}

TEST_CASE("polygon domain validation")
{
  CHECK_THROWS_AS(PolygonDomain(std::vector<Point2>{{0, 0}, {1, 1}, {1, 0}, {0, 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PolygonDomain(std::vector<Point2>{{0, 0}, {1, 0}, {1, 0}, {0, 1}}),
                  std::invalid_argument);
  PolygonDomain cw(std::vector<Point2>{{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  CHECK(cw.area() == Approx(1.0));
  CHECK(cw.diameter() == Approx(std::sqrt(2.0)));
}

TEST_CASE("boundary blend reproduces boundary data")
{
  auto dom = centered_square();
  auto g = [](Point2 p) { return std::sin(p.x) + p.y * p.y; };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Point2 p{1.0, u(rng)};
    CHECK(boundary_blend(*dom, g, p) == Approx(g(p)).epsilon(1e-14));
  }
  const Point2 inside{0.1, -0.2};
  CHECK(std::isfinite(boundary_blend(*dom, g, inside)));
}

TEST_CASE("quadrature rules integrate monomials exactly up to their degree")
{
  // Integral of x^i y^j over the reference triangle is i! j! / (i + j + 2)!.
  auto fact = [](int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i)
      f *= i;
    return f;
  };
  const std::array<Point2, 3> ref{Point2{0, 0}, Point2{1, 0}, Point2{0, 1}};
  for (int degree : {1, 2, 4, 5}) {
    const auto& rule = triangle_rule(degree);
    double wsum = 0;
    for (double w : rule.weights)
      wsum += w;
    CHECK(wsum == Approx(1.0).epsilon(1e-14));
    for (int i = 0; i <= degree; ++i)
      for (int j = 0; i + j <= degree; ++j) {
        double q = 0;
        for (std::size_t p = 0; p < rule.size(); ++p) {
          const Point2 x = rule.map(ref, p);
          q += rule.weights[p] * std::pow(x.x, i) * std::pow(x.y, j);
        }
        CHECK(0.5 * q == Approx(fact(i) * fact(j) / fact(i + j + 2)).epsilon(1e-13));
      }
  }
  CHECK(dunavant4().degree == 4);
  CHECK(dunavant4().size() == 6);
}

TEST_CASE("structured and ear-clipped meshes are conforming")
{
  auto s = structured_rectangle_mesh(0, 0, 2, 1, 4, 3);
  CHECK(s->num_vertices() == 20);
  CHECK(s->num_elements() == 24);
  CHECK(check_conformity(*s).ok);

  auto lshape = std::make_shared<const PolygonDomain>(
    std::vector<Point2>{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  auto ear = ear_clip(lshape);
  CHECK(ear->num_elements() == 4);
  CHECK(check_conformity(*ear).ok);
}

TEST_CASE("point locator finds the containing element")
{
  std::mt19937_64 rng(17);
  auto mesh = random_mesh(rng, 5, 3);
  PointLocator loc(mesh);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Point2 p{u(rng), u(rng)};
    auto hit = loc.locate(p);
    REQUIRE(hit.has_value());
    for (double b : hit->bary)
      CHECK(b >= -1e-10);
    const auto tri = mesh->corners(static_cast<std::size_t>(hit->element));
    const Point2 back = hit->bary[0] * tri[0] + hit->bary[1] * tri[1] + hit->bary[2] * tri[2];
    CHECK(distance(back, p) < 1e-12);
  }
  CHECK_FALSE(loc.locate({1.5, 0}).has_value());
}

TEST_CASE("background field POS output")
{
  auto mesh = two_triangle_square();
  std::ostringstream out;
  write_background_field(VertexField(mesh, {0.5, 0.5, 0.5, 0.5}), out);
  const std::string text = out.str();
  CHECK(text.rfind("View \"size\" {", 0) == 0);
  CHECK(count_records(text, "ST(") == 2);
  CHECK(count_records(text, "{0.5,0.5,0.5}") == 2);

  const std::vector<double> sizes{1.1381, 0.5090, 1.1381, 1.1381};
  std::ostringstream out2;
  write_background_field(VertexField(mesh, sizes), out2);
  const std::string t2 = out2.str();
  std::vector<double> carried;
  for (auto open = t2.find("){"); open != std::string::npos; open = t2.find("){", open + 1)) {
    std::istringstream rec(t2.substr(open + 2, t2.find('}', open) - open - 2));
    std::string tok;
    while (std::getline(rec, tok, ','))
      carried.push_back(std::stod(tok));
  }
  const std::vector<double> expected{1.1381, 0.5090, 1.1381, 1.1381, 1.1381, 1.1381};
  CHECK(carried == expected);

  std::ostringstream sink;
  CHECK_THROWS_AS(write_background_field(VertexField(mesh, {0.5, 0.0, 0.5, 0.5}), sink),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_background_field(VertexField(mesh, {0.5, -1.0, 0.5, 0.5}), sink),
                  std::invalid_argument);
}

TEST_CASE("parse MSH 2.2 and 4.1 fixtures")
{
  std::istringstream in22(kTwoTriangleMsh22);
  auto m22 = parse_msh(in22);
  CHECK(m22->num_vertices() == 4);
  CHECK(m22->num_elements() == 2);
  CHECK(m22->boundary_vertices().size() == 4);
  CHECK(check_conformity(*m22).ok);
  CHECK(m22->domain().area() == Approx(1.0));

  std::istringstream in41(kTwoTriangleMsh41);
  auto m41 = parse_msh(in41, unit_square());
  CHECK(m41->num_vertices() == 4);
  CHECK(m41->num_elements() == 2);
  CHECK(m41->boundary_vertices().size() == 4);
}

TEST_CASE("malformed MSH input is rejected")
{
  std::istringstream empty_nodes("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n0\n$EndNodes\n"
                                 "$Elements\n0\n$EndElements\n");
  CHECK_THROWS_AS(parse_msh(empty_nodes), MeshError);

  std::istringstream bad_version("$MeshFormat\n3.0 0 8\n$EndMeshFormat\n");
  CHECK_THROWS_AS(parse_msh(bad_version), MeshError);

  std::istringstream binary("$MeshFormat\n2.2 1 8\n$EndMeshFormat\n");
  CHECK_THROWS_AS(parse_msh(binary), MeshError);

  std::istringstream tet("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n"
                         "3 0 1 0\n4 0 0 1\n$EndNodes\n$Elements\n1\n1 4 2 0 1 1 2 3 4\n"
                         "$EndElements\n");
  CHECK_THROWS_AS(parse_msh(tet), MeshError);

  CHECK_THROWS_AS(parse_msh(std::filesystem::path("/nonexistent/out.msh")), MeshError);
}

TEST_CASE("MSH write and parse round trip")
{
  TempDir dir;
  FallbackGenerator gen;
  auto mesh = gen.uniform(unit_square(), 0.2);
  write_msh(*mesh, dir / "square.msh");
  auto back = parse_msh(dir / "square.msh", unit_square());
  CHECK(back->num_vertices() == mesh->num_vertices());
  CHECK(back->num_elements() == mesh->num_elements());
  CHECK(check_conformity(*back).ok);
  for (std::size_t v = 0; v < mesh->num_vertices(); ++v)
    CHECK(back->vertices()[v] == mesh->vertices()[v]);
}

TEST_CASE("bisection of one element of the two-triangle square")
{
  auto mesh = label_longest_edges(two_triangle_square());
  const std::vector<Index> marked{0};
  auto result = bisect_refine(mesh, marked);
  CHECK(result.mesh->num_vertices() == 5);
  CHECK(result.mesh->num_elements() == 4);
  CHECK(check_conformity(*result.mesh).ok);
  CHECK(result.mesh->vertices()[4] == Point2{0.5, 0.5});
  CHECK(result.ancestry.midpoint_of.size() == 1);

  auto none = bisect_refine(mesh, std::span<const Index>{});
  CHECK(none.mesh->num_vertices() == 4);
  CHECK(none.mesh->elements() == mesh->elements());
}

TEST_CASE("global bisection rounds stay conforming and nested")
{
  MeshPtr mesh = label_longest_edges(structured_rectangle_mesh(0, 0, 1, 1, 2, 2));
  for (int round = 0; round < 3; ++round) {
    std::vector<Index> all(mesh->num_elements());
    std::iota(all.begin(), all.end(), 0);
    auto r = bisect_refine(mesh, all);
    CHECK(r.mesh->num_elements() >= 2 * mesh->num_elements());
    CHECK(r.mesh->num_elements() <= 4 * mesh->num_elements());
    CHECK(check_conformity(*r.mesh).ok);
    for (std::size_t v = 0; v < mesh->num_vertices(); ++v)
      CHECK(r.mesh->vertices()[v] == mesh->vertices()[v]);
    for (std::size_t i = 0; i < r.ancestry.midpoint_of.size(); ++i) {
      const auto [a, b] = r.ancestry.midpoint_of[i];
      const Point2 mid = 0.5 * (mesh->vertices()[a] + mesh->vertices()[b]);
      CHECK(distance(r.mesh->vertices()[mesh->num_vertices() + i], mid) < 1e-15);
    }
    mesh = r.mesh;
  }
}

TEST_CASE("nested interpolation")
{
  auto coarse_mesh = label_longest_edges(two_triangle_square());
  const std::vector<Index> marked{0};
  auto r = bisect_refine(coarse_mesh, marked);
  FeFunction coarse(coarse_mesh, Eigen::Vector4d(0, 0, 1, 0));
  auto fine = nested_interpolate(coarse, r.mesh, r.ancestry);
  CHECK(fine[4] == Approx(0.5));

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    auto cm = random_mesh(rng, 3, 1);
    std::vector<Index> mk;
    for (std::size_t k = 0; k < cm->num_elements(); k += 2)
      mk.push_back(static_cast<Index>(k));
    auto rr = bisect_refine(cm, mk);

    Eigen::VectorXd lin(cm->num_vertices());
    for (std::size_t v = 0; v < cm->num_vertices(); ++v)
      lin[static_cast<Eigen::Index>(v)] = 2 * cm->vertices()[v].x - 3 * cm->vertices()[v].y + 1;
    auto fl = nested_interpolate(FeFunction(cm, lin), rr.mesh, rr.ancestry);
    for (std::size_t v = 0; v < rr.mesh->num_vertices(); ++v) {
      const Point2 p = rr.mesh->vertices()[v];
      CHECK(fl[v] == Approx(2 * p.x - 3 * p.y + 1).epsilon(1e-12));
    }

    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd rnd(cm->num_vertices());
    for (auto& x : rnd)
      x = u(rng);
    FeFunction fc(cm, rnd);
    auto ff = nested_interpolate(fc, rr.mesh, rr.ancestry);
    for (int i = 0; i < 100; ++i) {
      const Point2 p{0.999 * u(rng), 0.999 * u(rng)};
      CHECK(ff(p) == Approx(fc(p)).epsilon(1e-12));
    }
  }

  Ancestry wrong;
  CHECK_THROWS(nested_interpolate(coarse, coarse_mesh, r.ancestry));
  CHECK_THROWS(nested_interpolate(coarse, r.mesh, wrong));
}

TEST_CASE("fallback refinement")
{
  auto mesh = two_triangle_square();

  auto same = fallback_refine(VertexField(mesh, std::vector<double>(4, 2.0)));
  CHECK(same.mesh->num_vertices() == 4);
  CHECK(same.sweeps == 0);

  auto half = fallback_refine(VertexField(mesh, std::vector<double>(4, 0.5)));
  CHECK(check_conformity(*half.mesh).ok);
  CHECK(half.mesh->num_elements() > 2);
  for (std::size_t k = 0; k < half.mesh->num_elements(); ++k)
    CHECK(element_geometry(*half.mesh, k).avg_edge <= 0.5 + 1e-12);
  CHECK(half.remaining_violations == 0);

  // Halve the target on the left half only.
  auto base = structured_rectangle_mesh(-1, -1, 1, 1, 6, 6);
  auto h = vertex_averages(base, element_avg_edges(base));
  for (std::size_t v = 0; v < base->num_vertices(); ++v)
    if (base->vertices()[v].x < 0)
      h.values[v] *= 0.5;
  auto local = fallback_refine(h);
  CHECK(check_conformity(*local.mesh).ok);
  std::size_t left = 0, right = 0;
  for (std::size_t k = 0; k < local.mesh->num_elements(); ++k)
    (element_geometry(*local.mesh, k).centroid.x < 0 ? left : right) += 1;
  CHECK(left > 2 * right);
}

TEST_CASE("fallback refinement respects the vertex budget")
{
  auto mesh = structured_rectangle_mesh(0, 0, 1, 1, 4, 4);
  auto r = fallback_refine(VertexField(mesh, std::vector<double>(mesh->num_vertices(), 1e-3)),
                           kFallbackSweepCap, 300);
  CHECK(r.budget_exhausted);
  CHECK(r.mesh->num_vertices() <= 300);
  CHECK(check_conformity(*r.mesh).ok);
}

TEST_CASE("fallback generator")
{
  FallbackGenerator gen;
  auto m = generate_mesh(gen, unit_square(), 0.5);
  CHECK(check_conformity(*m).ok);
  CHECK(m->num_vertices() >= 9);

  auto tri = std::make_shared<const PolygonDomain>(std::vector<Point2>{{0, 0}, {1, 0}, {0, 1}});
  auto small = generate_mesh(gen, tri, 10.0);
  CHECK(small->num_elements() >= 1);
  CHECK(check_conformity(*small).ok);

  auto base = generate_mesh(gen, centered_square(), 0.3);
  auto again = generate_mesh(gen, vertex_averages(base, element_avg_edges(base)));
  CHECK(check_conformity(*again).ok);
  CHECK(again->num_vertices() <= 2 * base->num_vertices());
  CHECK(2 * again->num_vertices() >= base->num_vertices());
}

TEST_CASE("external generator subprocess contract")
{
  TempDir dir;
  const auto script = dir / "fake_gmsh.sh";
  {
    std::ofstream s(script);
    s << "#!/bin/sh\n"
         "echo \"$@\" > args.txt\n"
         "[ \"$1\" = \"-2\" ] && [ \"$2\" = \"-format\" ] && [ \"$3\" = \"msh2\" ] || exit 3\n"
         "[ -f domain.geo ] || exit 4\n"
         "cat > out.msh <<'EOF'\n"
      << kTwoTriangleMsh22 << "EOF\n";
  }
  std::filesystem::permissions(script, std::filesystem::perms::owner_all);

  GmshOptions opts;
  opts.executable = script.string();
  opts.workdir = dir / "work";
  GmshGenerator gen(opts);
  auto m = gen.uniform(unit_square(), 0.5);
  CHECK(m->num_vertices() == 4);
  CHECK(check_conformity(*m).ok);
  std::ifstream args(dir / "work" / "args.txt");
  std::string line;
  std::getline(args, line);
  CHECK(line == "-2 -format msh2 -o out.msh domain.geo");

  auto sized = gen.from_size_field(VertexField(m, std::vector<double>(4, 0.25)));
  CHECK(sized->num_elements() == 2);
  CHECK(std::filesystem::exists(dir / "work" / "field.pos"));
  std::ifstream geo(dir / "work" / "domain.geo");
  std::stringstream geo_text;
  geo_text << geo.rdbuf();
  CHECK(geo_text.str().find("Background Field = 1;") != std::string::npos);
  CHECK(geo_text.str().find("Merge \"field.pos\"") != std::string::npos);

  const auto failing = dir / "failing.sh";
  {
    std::ofstream s(failing);
    s << "#!/bin/sh\nexit 2\n";
  }
  std::filesystem::permissions(failing, std::filesystem::perms::owner_all);
  opts.executable = failing.string();
  GmshGenerator bad(opts);
  CHECK_THROWS_AS(bad.uniform(unit_square(), 0.5), GeneratorError);

  opts.executable = (dir / "does-not-exist").string();
  GmshGenerator missing(opts);
  CHECK_THROWS_AS(missing.uniform(unit_square(), 0.5), GeneratorNotFound);

  opts.fallback_if_missing = true;
  GmshGenerator rescued(opts);
  CHECK(check_conformity(*rescued.uniform(unit_square(), 0.5)).ok);
}

TEST_CASE("generator kind parsing")
{
  CHECK(parse_generator_kind("external") == GeneratorKind::external);
  CHECK(parse_generator_kind("fallback") == GeneratorKind::fallback);
  CHECK_THROWS_AS(parse_generator_kind("tetgen"), std::invalid_argument);
  CHECK(make_generator(GeneratorKind::fallback)->name() == "fallback");
}
