#include "parafem/mesh_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace parafem {

namespace {

std::string fmt_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void write_background_field(const VertexField& size, std::ostream& out)
{
  for (double s : size.values)
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::invalid_argument("background field sizes must be positive and finite");
  const Mesh& mesh = *size.mesh;
  out << "View \"size\" {\n";
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Triangle& t = mesh.elements()[k];
    out << "ST(";
    for (int i = 0; i < 3; ++i) {
      const Point2 p = mesh.vertices()[t[i]];
      out << fmt_double(p.x) << ',' << fmt_double(p.y) << ",0" << (i < 2 ? "," : "");
    }
    out << "){" << fmt_double(size.values[t[0]]) << ',' << fmt_double(size.values[t[1]]) << ','
        << fmt_double(size.values[t[2]]) << "};\n";
  }
  out << "};\n";
}

void write_background_field(const VertexField& size, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_background_field(size, out);
  if (!out)
    throw std::runtime_error("write failed: " + path.string());
}

void write_geo(const PolygonDomain& domain, const std::filesystem::path& path, double uniform_h,
               const std::filesystem::path* background_view)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto& pts = domain.boundary();
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    out << "Point(" << i + 1 << ") = {" << fmt_double(pts[i].x) << ", " << fmt_double(pts[i].y)
        << ", 0, " << fmt_double(uniform_h) << "};\n";
  for (std::size_t i = 0; i < n; ++i)
    out << "Line(" << i + 1 << ") = {" << i + 1 << ", " << (i + 1) % n + 1 << "};\n";
  out << "Curve Loop(1) = {";
  for (std::size_t i = 0; i < n; ++i)
    out << i + 1 << (i + 1 < n ? ", " : "};\n");
  out << "Plane Surface(1) = {1};\n";
  if (background_view) {
    out << "Merge \"" << background_view->filename().string() << "\";\n"
        << "Field[1] = PostView;\n"
        << "Field[1].ViewIndex = 0;\n"
        << "Background Field = 1;\n"
        << "Mesh.CharacteristicLengthExtendFromBoundary = 0;\n"
        << "Mesh.CharacteristicLengthFromPoints = 0;\n"
        << "Mesh.CharacteristicLengthFromCurvature = 0;\n";
  }
  if (!out)
    throw std::runtime_error("write failed: " + path.string());
}

namespace {

class Tokens
{
public:
  explicit Tokens(std::istream& in) : in_(in) {}

  bool next(std::string& tok)
  {
    if (in_ >> tok)
      return true;
    return false;
  }

  std::string need(const char* what)
  {
    std::string tok;
    if (!next(tok))
      throw MeshError(std::string("MSH: unexpected end of file reading ") + what);
    return tok;
  }

  long long integer(const char* what)
  {
    const std::string tok = need(what);
    long long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      throw MeshError(std::string("MSH: malformed integer for ") + what + ": '" + tok + "'");
    return v;
  }

  double real(const char* what)
  {
    const std::string tok = need(what);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size())
        throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw MeshError(std::string("MSH: malformed number for ") + what + ": '" + tok + "'");
    }
  }

  void expect(const std::string& keyword)
  {
    const std::string tok = need(keyword.c_str());
    if (tok != keyword)
      throw MeshError("MSH: expected " + keyword + ", found '" + tok + "'");
  }

  void skip_section(const std::string& name)
  {
    const std::string end = "$End" + name.substr(1);
    std::string tok;
    while (next(tok))
      if (tok == end)
        return;
    throw MeshError("MSH: unterminated section " + name);
  }

private:
  std::istream& in_;
};

int nodes_per_element(long long type)
{
  switch (type) {
  case 1: return 2;
  case 2: return 3;
  case 3: return 4;
  case 4: return 4;
  case 5: return 8;
  case 6: return 6;
  case 7: return 5;
  case 8: return 3;
  case 9: return 6;
  case 15: return 1;
  default: return -1;
  }
}

// Accept triangles, skip points and lines, reject everything else.
bool accept_element(long long type)
{
  if (type == 2)
    return true;
  if (type == 1 || type == 8 || type == 15)
    return false;
  if (type == 4 || type == 5 || type == 6 || type == 7)
    throw MeshError("MSH: volume elements (type " + std::to_string(type) + ") are not supported");
  throw MeshError("MSH: unsupported element type " + std::to_string(type));
}

struct RawMesh
{
  std::unordered_map<long long, Point2> nodes;
  std::vector<std::array<long long, 3>> triangles;
};

void read_nodes_v2(Tokens& tok, RawMesh& raw)
{
  const long long n = tok.integer("node count");
  if (n <= 0)
    throw MeshError("MSH: empty $Nodes section");
  for (long long i = 0; i < n; ++i) {
    const long long id = tok.integer("node tag");
    const double x = tok.real("x");
    const double y = tok.real("y");
    tok.real("z");
    raw.nodes[id] = {x, y};
  }
  tok.expect("$EndNodes");
}

void read_elements_v2(Tokens& tok, RawMesh& raw)
{
  const long long n = tok.integer("element count");
  for (long long i = 0; i < n; ++i) {
    tok.integer("element tag");
    const long long type = tok.integer("element type");
    const long long ntags = tok.integer("tag count");
    for (long long t = 0; t < ntags; ++t)
      tok.integer("element tag value");
    const int nn = nodes_per_element(type);
    if (nn < 0)
      throw MeshError("MSH: unsupported element type " + std::to_string(type));
    const bool keep = accept_element(type);
    std::array<long long, 3> tri{};
    for (int j = 0; j < nn; ++j) {
      const long long id = tok.integer("element node");
      if (keep)
        tri[static_cast<std::size_t>(j)] = id;
    }
    if (keep)
      raw.triangles.push_back(tri);
  }
  tok.expect("$EndElements");
}

void read_nodes_v4(Tokens& tok, RawMesh& raw)
{
  const long long blocks = tok.integer("entity block count");
  const long long total = tok.integer("node count");
  tok.integer("min node tag");
  tok.integer("max node tag");
  if (total <= 0)
    throw MeshError("MSH: empty $Nodes section");
  for (long long b = 0; b < blocks; ++b) {
    const long long dim = tok.integer("entity dim");
    tok.integer("entity tag");
    const long long parametric = tok.integer("parametric flag");
    const long long count = tok.integer("nodes in block");
    std::vector<long long> tags(static_cast<std::size_t>(count));
    for (auto& t : tags)
      t = tok.integer("node tag");
    for (long long t : tags) {
      const double x = tok.real("x");
      const double y = tok.real("y");
      tok.real("z");
      if (parametric)
        for (long long p = 0; p < std::min<long long>(dim, 3); ++p)
          tok.real("parametric coordinate");
      raw.nodes[t] = {x, y};
    }
  }
  tok.expect("$EndNodes");
}

void read_elements_v4(Tokens& tok, RawMesh& raw)
{
  const long long blocks = tok.integer("entity block count");
  tok.integer("element count");
  tok.integer("min element tag");
  tok.integer("max element tag");
  for (long long b = 0; b < blocks; ++b) {
    tok.integer("entity dim");
    tok.integer("entity tag");
    const long long type = tok.integer("element type");
    const long long count = tok.integer("elements in block");
    const int nn = nodes_per_element(type);
    if (nn < 0)
      throw MeshError("MSH: unsupported element type " + std::to_string(type));
    const bool keep = accept_element(type);
    for (long long e = 0; e < count; ++e) {
      tok.integer("element tag");
      std::array<long long, 3> tri{};
      for (int j = 0; j < nn; ++j) {
        const long long id = tok.integer("element node");
        if (keep)
          tri[static_cast<std::size_t>(j)] = id;
      }
      if (keep)
        raw.triangles.push_back(tri);
    }
  }
  tok.expect("$EndElements");
}

} // namespace

DomainPtr domain_from_boundary(const std::vector<Point2>& vertices,
                               const std::vector<Triangle>& elements)
{
  // Directed boundary edges of a CCW mesh: edges whose reverse is absent.
  std::map<std::pair<Index, Index>, int> directed;
  for (const Triangle& t0 : elements) {
    Triangle t = t0;
    if (orient2d(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0)
      std::swap(t[1], t[2]);
    for (int i = 0; i < 3; ++i)
      directed[{t[i], t[(i + 1) % 3]}] += 1;
  }
  std::map<Index, Index> next;
  for (const auto& [e, count] : directed)
    if (!directed.count({e.second, e.first}))
      next[e.first] = e.second;
  if (next.empty())
    throw MeshError("mesh has no boundary");
  std::vector<Point2> loop;
  const Index start = next.begin()->first;
  Index cur = start;
  do {
    loop.push_back(vertices[cur]);
    auto it = next.find(cur);
    if (it == next.end())
      throw MeshError("mesh boundary is not a closed loop");
    cur = it->second;
    if (loop.size() > next.size())
      throw MeshError("mesh boundary is not a simple loop");
  } while (cur != start);
  if (loop.size() != next.size())
    throw MeshError("mesh boundary has several components");

  std::vector<Point2> corners;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = loop[(i + n - 1) % n];
    const Point2 b = loop[i];
    const Point2 c = loop[(i + 1) % n];
    const double scale = distance(a, b) * distance(b, c);
    if (std::abs(orient2d(a, b, c)) > 1e-12 * scale)
      corners.push_back(b);
  }
  return std::make_shared<const PolygonDomain>(std::move(corners));
}

MeshPtr parse_msh(std::istream& in, DomainPtr domain)
{
  Tokens tok(in);
  RawMesh raw;
  std::string version;
  bool have_nodes = false;
  bool have_elements = false;
  std::string word;
  while (tok.next(word)) {
    if (word == "$MeshFormat") {
      version = tok.need("version");
      const long long file_type = tok.integer("file type");
      tok.integer("data size");
      if (file_type != 0)
        throw MeshError("MSH: binary files are not supported");
      if (version != "2.2" && version != "2.1" && version != "2" && version != "4.1")
        throw MeshError("MSH: unsupported format version " + version);
      tok.expect("$EndMeshFormat");
    } else if (word == "$Nodes") {
      if (version.empty())
        throw MeshError("MSH: $Nodes before $MeshFormat");
      version == "4.1" ? read_nodes_v4(tok, raw) : read_nodes_v2(tok, raw);
      have_nodes = true;
    } else if (word == "$Elements") {
      if (version.empty())
        throw MeshError("MSH: $Elements before $MeshFormat");
      version == "4.1" ? read_elements_v4(tok, raw) : read_elements_v2(tok, raw);
      have_elements = true;
    } else if (!word.empty() && word[0] == '$') {
      tok.skip_section(word);
    } else {
      throw MeshError("MSH: unexpected token '" + word + "'");
    }
  }
  if (version.empty())
    throw MeshError("MSH: missing $MeshFormat");
  if (!have_nodes || !have_elements)
    throw MeshError("MSH: missing $Nodes or $Elements section");
  if (raw.triangles.empty())
    throw MeshError("MSH: no triangles in file");

  // Compact to the nodes referenced by triangles, in tag order.
  std::map<long long, Index> index_of;
  for (const auto& t : raw.triangles)
    for (long long id : t) {
      if (!raw.nodes.count(id))
        throw MeshError("MSH: element references unknown node " + std::to_string(id));
      index_of.emplace(id, 0);
    }
  std::vector<Point2> verts;
  verts.reserve(index_of.size());
  for (auto& [id, idx] : index_of) {
    idx = static_cast<Index>(verts.size());
    verts.push_back(raw.nodes.at(id));
  }
  std::vector<Triangle> tris;
  tris.reserve(raw.triangles.size());
  for (const auto& t : raw.triangles)
    tris.push_back({index_of.at(t[0]), index_of.at(t[1]), index_of.at(t[2])});

  if (!domain)
    domain = domain_from_boundary(verts, tris);
  return make_mesh(std::move(verts), std::move(tris), std::move(domain));
}

MeshPtr parse_msh(const std::filesystem::path& path, DomainPtr domain)
{
  std::ifstream in(path);
  if (!in)
    throw MeshError("cannot open " + path.string());
  return parse_msh(in, std::move(domain));
}

void write_msh(const Mesh& mesh, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << mesh.num_vertices() << '\n';
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    out << i + 1 << ' ' << fmt_double(mesh.vertices()[i].x) << ' '
        << fmt_double(mesh.vertices()[i].y) << " 0\n";
  out << "$EndNodes\n$Elements\n" << mesh.num_elements() << '\n';
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const Triangle& t = mesh.elements()[k];
    out << k + 1 << " 2 2 0 1 " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  out << "$EndElements\n";
}

} // namespace parafem
