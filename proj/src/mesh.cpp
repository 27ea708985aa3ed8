#include "tetrodiff/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tetrodiff/error.hpp"

namespace tetrodiff {

FaceKey::FaceKey(NodeId a, NodeId b, NodeId c) : n{a, b, c} { std::sort(n.begin(), n.end()); }

NodeId Mesh::add_node(const Node& node) {
  if (!node.position.allFinite()) throw GeometryError("add_node: non-finite coordinates");
  nodes_.push_back(node);
  node_elems_.emplace_back();
  bbox_lo_ = bbox_lo_.cwiseMin(node.position);
  bbox_hi_ = bbox_hi_.cwiseMax(node.position);
  return static_cast<NodeId>(nodes_.size() - 1);
}

ElemId Mesh::add_element(std::array<NodeId, 4> nodes) {
  for (int i = 0; i < 4; ++i) {
    if (nodes[i] >= nodes_.size()) throw GeometryError("add_element: node index out of range");
    for (int j = 0; j < i; ++j)
      if (nodes[i] == nodes[j]) throw GeometryError("add_element: repeated node");
  }
  TetElement el{nodes, 0.0};
  el.volume = tet_volume(nodes_[nodes[0]].position, nodes_[nodes[1]].position,
                         nodes_[nodes[2]].position, nodes_[nodes[3]].position);
  if (el.volume < 0.0) {
    std::swap(el.nodes[2], el.nodes[3]);
    el.volume = -el.volume;
  }
  if (!(el.volume > degenerate_tolerance()))
    throw GeometryError("add_element: degenerate element (volume " + std::to_string(el.volume) +
                        ")");
  elements_.push_back(el);
  const auto id = static_cast<ElemId>(elements_.size() - 1);
  attach(id);
  return id;
}

void Mesh::replace_element(ElemId e, const std::array<NodeId, 4>& nodes) {
  detach(e);
  elements_[e].nodes = nodes;
  const auto p = points(e);
  elements_[e].volume = tet_volume(p);
  attach(e);
}

void Mesh::remove_element(ElemId e) {
  const auto last = static_cast<ElemId>(elements_.size() - 1);
  detach(e);
  if (e != last) {
    detach(last);
    elements_[e] = elements_[last];
    elements_.pop_back();
    attach(e);
  } else {
    elements_.pop_back();
  }
}

void Mesh::move_node(NodeId n, const Point3& p) {
  nodes_[n].position = p;
  for (ElemId e : node_elems_[n]) elements_[e].volume = tet_volume(points(e));
}

void Mesh::set_positions(std::span<const Point3> positions) {
  if (positions.size() != nodes_.size()) throw GeometryError("set_positions: size mismatch");
  for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i].position = positions[i];
  for (auto& el : elements_) {
    el.volume = tet_volume(nodes_[el.nodes[0]].position, nodes_[el.nodes[1]].position,
                           nodes_[el.nodes[2]].position, nodes_[el.nodes[3]].position);
  }
}

std::vector<Point3> Mesh::positions() const {
  std::vector<Point3> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.position);
  return out;
}

TetPoints Mesh::points(ElemId e) const {
  const auto& el = elements_[e];
  return {nodes_[el.nodes[0]].position, nodes_[el.nodes[1]].position,
          nodes_[el.nodes[2]].position, nodes_[el.nodes[3]].position};
}

TetPoints Mesh::points_with(ElemId e, NodeId n, const Point3& p) const {
  TetPoints pts = points(e);
  for (int i = 0; i < 4; ++i)
    if (elements_[e].nodes[i] == n) pts[i] = p;
  return pts;
}

void Mesh::attach(ElemId e) {
  const auto& nd = elements_[e].nodes;
  for (NodeId n : nd) node_elems_[n].push_back(e);
  for (const auto& [i, j] : kTetEdges) edge_elems_[EdgeKey(nd[i], nd[j]).packed()].push_back(e);
}

void Mesh::detach(ElemId e) {
  const auto& nd = elements_[e].nodes;
  auto erase_one = [e](std::vector<ElemId>& v) {
    auto it = std::find(v.begin(), v.end(), e);
    if (it != v.end()) v.erase(it);
  };
  for (NodeId n : nd) erase_one(node_elems_[n]);
  for (const auto& [i, j] : kTetEdges) {
    auto it = edge_elems_.find(EdgeKey(nd[i], nd[j]).packed());
    if (it == edge_elems_.end()) continue;
    erase_one(it->second);
    if (it->second.empty()) edge_elems_.erase(it);
  }
}

void Mesh::build_adjacency() {
  node_elems_.assign(nodes_.size(), {});
  edge_elems_.clear();
  for (ElemId e = 0; e < elements_.size(); ++e) attach(e);
}

std::span<const ElemId> Mesh::elements_of_edge(NodeId a, NodeId b) const {
  auto it = edge_elems_.find(EdgeKey(a, b).packed());
  if (it == edge_elems_.end()) return {};
  return it->second;
}

std::vector<EdgeKey> Mesh::edges() const {
  std::vector<EdgeKey> out;
  out.reserve(edge_elems_.size());
  for (const auto& [key, elems] : edge_elems_)
    out.emplace_back(static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffu));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> Mesh::neighbors(NodeId n) const {
  std::vector<NodeId> out;
  for (ElemId e : node_elems_[n])
    for (NodeId m : elements_[e].nodes)
      if (m != n) out.push_back(m);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Mesh::face_multiplicity(NodeId a, NodeId b, NodeId c) const {
  int count = 0;
  for (ElemId e : elements_of_edge(a, b)) {
    const auto& nd = elements_[e].nodes;
    if (std::find(nd.begin(), nd.end(), c) != nd.end()) ++count;
  }
  return count;
}

std::vector<BoundaryFace> Mesh::boundary_faces() const {
  std::map<FaceKey, std::pair<int, BoundaryFace>> seen;
  for (ElemId e = 0; e < elements_.size(); ++e) {
    const auto& nd = elements_[e].nodes;
    for (int opp = 0; opp < 4; ++opp) {
      std::array<NodeId, 3> f{};
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != opp) f[k++] = nd[i];
      FaceKey key(f[0], f[1], f[2]);
      auto& slot = seen[key];
      ++slot.first;
      slot.second = BoundaryFace{key, e, opp};
    }
  }
  std::vector<BoundaryFace> out;
  for (const auto& [key, v] : seen)
    if (v.first == 1) out.push_back(v.second);
  return out;
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (const auto& el : elements_) v += el.volume;
  return v;
}

double Mesh::bbox_diagonal() const {
  if (nodes_.empty()) return 0.0;
  return (bbox_hi_ - bbox_lo_).norm();
}

double Mesh::degenerate_tolerance() const {
  const double d = bbox_diagonal();
  return 1e-12 * d * d * d;
}

double Mesh::surface_tolerance() const { return 1e-9 * bbox_diagonal(); }

ValidityReport Mesh::check_validity(const Domain* domain) const {
  ValidityReport r;
  auto note = [&r](const std::string& s) {
    if (r.first_problem.empty()) r.first_problem = s;
  };
  const double tol = degenerate_tolerance();
  for (ElemId e = 0; e < elements_.size(); ++e) {
    const double v = tet_volume(points(e));
    if (!(v > tol)) {
      ++r.inverted;
      note("element " + std::to_string(e) + " has volume " + std::to_string(v));
    }
    if (std::abs(v - elements_[e].volume) > 1e-12 * std::max(std::abs(v), tol)) {
      ++r.bad_cached_volume;
      note("element " + std::to_string(e) + " cached volume is stale");
    }
  }
  // Fresh adjacency, compared as sorted lists.
  std::vector<std::vector<ElemId>> fresh_nodes(nodes_.size());
  std::map<std::uint64_t, std::vector<ElemId>> fresh_edges;
  for (ElemId e = 0; e < elements_.size(); ++e) {
    const auto& nd = elements_[e].nodes;
    for (NodeId n : nd) {
      if (n >= nodes_.size()) {
        ++r.adjacency_errors;
        note("element " + std::to_string(e) + " references a missing node");
        return r;
      }
      fresh_nodes[n].push_back(e);
    }
    for (const auto& [i, j] : kTetEdges) fresh_edges[EdgeKey(nd[i], nd[j]).packed()].push_back(e);
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    auto cached = node_elems_[n];
    std::sort(cached.begin(), cached.end());
    if (cached != fresh_nodes[n]) {
      ++r.adjacency_errors;
      note("node->elements mismatch at node " + std::to_string(n));
    }
  }
  if (fresh_edges.size() != edge_elems_.size()) {
    ++r.adjacency_errors;
    note("edge map size mismatch");
  }
  for (const auto& [key, elems] : fresh_edges) {
    auto it = edge_elems_.find(key);
    if (it == edge_elems_.end()) {
      ++r.adjacency_errors;
      note("edge missing from edge map");
      continue;
    }
    auto cached = it->second;
    std::sort(cached.begin(), cached.end());
    if (cached != elems) {
      ++r.adjacency_errors;
      note("edge->elements mismatch");
    }
  }
  if (domain) {
    const double stol = std::max(surface_tolerance(), 1e-9 * domain->bbox_diagonal());
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      const auto& nd = nodes_[n];
      if (nd.surfaces && domain->residual(nd.position, nd.surfaces) > stol) {
        ++r.off_surface_nodes;
        note("outer node " + std::to_string(n) + " is off its surface");
      }
    }
  }
  return r;
}

ShapeCoeffs shape_coeffs(const Mesh& mesh, ElemId e) {
  return shape_coeffs(mesh.points(e), mesh.degenerate_tolerance());
}

}  // namespace tetrodiff
