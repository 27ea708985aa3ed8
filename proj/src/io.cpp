#include "tetrodiff/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tetrodiff/error.hpp"

namespace tetrodiff::io {

namespace {

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  return f;
}

class LineReader {
 public:
  LineReader(std::istream& in, int consumed) : in_(in), line_(consumed) {}

  /// Next non-comment, non-blank line split on whitespace. Throws at end of input.
  std::vector<std::string> next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ss(line);
      std::vector<std::string> tok;
      for (std::string t; ss >> t;) tok.push_back(t);
      return tok;
    }
    throw ParseError(std::string("unexpected end of file, expecting ") + expecting, line_ + 1);
  }
  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_;
};

double parse_double(const std::string& s, int line) {
  const char* end = s.data() + s.size();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ParseError("bad number '" + s + "'", line);
  return v;
}

unsigned long long parse_uint(const std::string& s, int line) {
  const char* end = s.data() + s.size();
  unsigned long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError("bad integer '" + s + "'", line);
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_mesh(std::ostream& out, const Mesh& mesh, const std::vector<std::string>& comments) {
  out << "TETMESH v1\n";
  write_comments(out, comments);
  out << mesh.node_count() << '\n';
  for (NodeId n = 0; n < mesh.node_count(); ++n) {
    const Node& node = mesh.node(n);
    out << n << ' ' << format_double(node.position.x()) << ' ' << format_double(node.position.y()) << ' '
        << format_double(node.position.z()) << ' ' << (node.is_outer() ? "outer" : "inner") << ' '
        << node.surfaces << '\n';
  }
  out << mesh.element_count() << '\n';
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const auto& nd = mesh.element(e).nodes;
    out << e << ' ' << nd[0] << ' ' << nd[1] << ' ' << nd[2] << ' ' << nd[3] << '\n';
  }
}

void write_mesh_file(const std::string& path, const Mesh& mesh, const std::vector<std::string>& comments) {
  auto f = open_out(path);
  write_mesh(f, mesh, comments);
  if (!f) throw Error("write to '" + path + "' failed");
}

Mesh read_mesh(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("empty file", 1);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "TETMESH v1") throw ParseError("expected header 'TETMESH v1'", 1);
  LineReader r(in, 1);
  const auto line_of = [&] { return r.line(); };

  auto tok = r.next("node count");
  if (tok.size() != 1) throw ParseError("expected node count", line_of());
  const auto node_count = parse_uint(tok[0], line_of());

  Mesh mesh;
  for (unsigned long long i = 0; i < node_count; ++i) {
    tok = r.next("node line");
    const int ln = line_of();
    if (tok.size() != 6) throw ParseError("node line needs 6 fields", ln);
    if (parse_uint(tok[0], ln) != i) throw ParseError("node ids must be consecutive from 0", ln);
    Node node;
    node.position = Point3(parse_double(tok[1], ln), parse_double(tok[2], ln), parse_double(tok[3], ln));
    const auto mask = parse_uint(tok[5], ln);
    if (mask > 0xffffffffULL) throw ParseError("surface mask out of range", ln);
    node.surfaces = static_cast<SurfaceMask>(mask);
    if (tok[4] != "inner" && tok[4] != "outer") throw ParseError("class must be 'inner' or 'outer'", ln);
    if ((tok[4] == "outer") != node.is_outer()) throw ParseError("class does not match surface mask", ln);
    mesh.add_node(node);
  }

  tok = r.next("element count");
  if (tok.size() != 1) throw ParseError("expected element count", line_of());
  const auto elem_count = parse_uint(tok[0], line_of());
  for (unsigned long long i = 0; i < elem_count; ++i) {
    tok = r.next("element line");
    const int ln = line_of();
    if (tok.size() != 5) throw ParseError("element line needs 5 fields", ln);
    if (parse_uint(tok[0], ln) != i) throw ParseError("element ids must be consecutive from 0", ln);
    std::array<NodeId, 4> nd{};
    for (int k = 0; k < 4; ++k) {
      const auto v = parse_uint(tok[static_cast<std::size_t>(k + 1)], ln);
      if (v >= node_count) throw ParseError("element references unknown node " + tok[static_cast<std::size_t>(k + 1)], ln);
      nd[k] = static_cast<NodeId>(v);
    }
    const double v = tet_volume(mesh.node(nd[0]).position, mesh.node(nd[1]).position,
                                mesh.node(nd[2]).position, mesh.node(nd[3]).position);
    if (!(v > mesh.degenerate_tolerance())) throw ParseError("element is degenerate or inverted", ln);
    try {
      mesh.add_element(nd);
    } catch (const GeometryError& e) {
      throw ParseError(e.what(), ln);
    }
  }
  std::string rest;
  for (int ln = r.line() + 1; std::getline(in, rest); ++ln) {
    const auto first = rest.find_first_not_of(" \t\r");
    if (first != std::string::npos && rest[first] != '#')
      throw ParseError("trailing content after elements", ln);
  }
  return mesh;
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  return read_mesh(f);
}

void write_vtk(std::ostream& out, const Mesh& mesh, const std::string& title,
               const std::vector<PointField>& point_data, const std::vector<CellVectorField>& cell_data) {
  out << "# vtk DataFile Version 3.0\n" << (title.empty() ? "tetrodiff" : title) << "\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& n : mesh.nodes())
    out << format_double(n.position.x()) << ' ' << format_double(n.position.y()) << ' '
        << format_double(n.position.z()) << '\n';
  out << "CELLS " << mesh.element_count() << ' ' << 5 * mesh.element_count() << '\n';
  for (const auto& e : mesh.elements())
    out << "4 " << e.nodes[0] << ' ' << e.nodes[1] << ' ' << e.nodes[2] << ' ' << e.nodes[3] << '\n';
  out << "CELL_TYPES " << mesh.element_count() << '\n';
  for (std::size_t i = 0; i < mesh.element_count(); ++i) out << "10\n";
  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.node_count() << '\n';
    for (const auto& f : point_data) {
      if (f.values.size() != mesh.node_count()) throw Error("point field '" + f.name + "' has wrong length");
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) out << format_double(v) << '\n';
    }
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << mesh.element_count() << '\n';
    for (const auto& f : cell_data) {
      if (f.values.size() != mesh.element_count()) throw Error("cell field '" + f.name + "' has wrong length");
      out << "VECTORS " << f.name << " double\n";
      for (const auto& v : f.values)
        out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    }
  }
}

void write_vtk_file(const std::string& path, const Mesh& mesh, const std::string& title,
                    const std::vector<PointField>& point_data, const std::vector<CellVectorField>& cell_data) {
  auto f = open_out(path);
  write_vtk(f, mesh, title, point_data, cell_data);
}

void write_histogram_csv(std::ostream& out, const Histogram& h, const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << "bin_lo,bin_hi,center,count\n";
  const double w = h.counts.empty() ? 0.0 : (h.hi - h.lo) / static_cast<double>(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out << format_double(h.lo + w * static_cast<double>(i)) << ','
        << format_double(h.lo + w * static_cast<double>(i + 1)) << ',' << format_double(h.bin_center(i))
        << ',' << h.counts[i] << '\n';
}

void write_nodal_csv(std::ostream& out, const Mesh& mesh, const std::vector<PointField>& fields,
                     const std::vector<std::string>& comments) {
  write_comments(out, comments);
  out << "node,x,y,z";
  for (const auto& f : fields) {
    if (f.values.size() != mesh.node_count()) throw Error("field '" + f.name + "' has wrong length");
    out << ',' << f.name;
  }
  out << '\n';
  for (NodeId n = 0; n < mesh.node_count(); ++n) {
    const auto& p = mesh.node(n).position;
    out << n << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z());
    for (const auto& f : fields) out << ',' << format_double(f.values[n]);
    out << '\n';
  }
}

void write_flux_csv(std::ostream& out, const Mesh& mesh, const std::vector<Eigen::Vector3d>& flux,
                    const std::vector<std::string>& comments) {
  if (flux.size() != mesh.element_count()) throw Error("flux field has wrong length");
  write_comments(out, comments);
  out << "element,cx,cy,cz,jx,jy,jz\n";
  for (ElemId e = 0; e < mesh.element_count(); ++e) {
    const auto p = mesh.points(e);
    const Point3 c = 0.25 * (p[0] + p[1] + p[2] + p[3]);
    out << e << ',' << format_double(c.x()) << ',' << format_double(c.y()) << ',' << format_double(c.z())
        << ',' << format_double(flux[e].x()) << ',' << format_double(flux[e].y()) << ','
        << format_double(flux[e].z()) << '\n';
  }
}

}  // namespace tetrodiff::io
