#include "tetrodiff/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace tetrodiff::delaunay {

namespace {

using NodeQuad = std::array<NodeId, 4>;

TetPoints points_of(const Mesh& mesh, const NodeQuad& q) {
  return {mesh.node(q[0]).position, mesh.node(q[1]).position, mesh.node(q[2]).position,
          mesh.node(q[3]).position};
}

NodeQuad oriented(const Mesh& mesh, NodeQuad q) {
  if (tet_volume(points_of(mesh, q)) < 0.0) std::swap(q[2], q[3]);
  return q;
}

// Normalized depth of p inside the circumsphere, 0 when outside or on it.
double violation_depth(const TetPoints& t, const Point3& p) {
  if (!inside_circumsphere(t, p)) return 0.0;
  Point3 c;
  double r2 = 0.0;
  if (!circumsphere(t, c, r2)) return 1.0;
  return std::max(0.0, (r2 - (p - c).squaredNorm()) / r2);
}

double config_violation(const Mesh& mesh, const std::vector<NodeQuad>& tets,
                        const std::vector<NodeId>& vertices) {
  double worst = 0.0;
  for (const auto& q : tets) {
    const auto t = points_of(mesh, oriented(mesh, q));
    for (NodeId v : vertices) {
      if (std::find(q.begin(), q.end(), v) != q.end()) continue;
      worst = std::max(worst, violation_depth(t, mesh.node(v).position));
    }
  }
  return worst;
}

// Sum of |volume| and the smallest |volume| of a candidate configuration.
std::pair<double, double> config_volumes(const Mesh& mesh, const std::vector<NodeQuad>& tets) {
  double sum = 0.0, smallest = std::numeric_limits<double>::infinity();
  for (const auto& q : tets) {
    const double v = std::abs(tet_volume(points_of(mesh, q)));
    sum += v;
    smallest = std::min(smallest, v);
  }
  return {sum, smallest};
}

// Ring vertices around an interior edge in cyclic order, or nullopt for a boundary edge.
std::optional<std::vector<NodeId>> edge_ring(const Mesh& mesh, const EdgeKey& edge) {
  const auto sharers = mesh.elements_of_edge(edge.lo, edge.hi);
  std::map<NodeId, std::vector<NodeId>> links;
  for (ElemId e : sharers) {
    std::array<NodeId, 2> pair{};
    int k = 0;
    for (NodeId n : mesh.element(e).nodes)
      if (n != edge.lo && n != edge.hi) pair[k++] = n;
    links[pair[0]].push_back(pair[1]);
    links[pair[1]].push_back(pair[0]);
  }
  for (const auto& [v, l] : links)
    if (l.size() != 2) return std::nullopt;
  if (links.size() != sharers.size()) return std::nullopt;
  std::vector<NodeId> ring;
  NodeId start = links.begin()->first;
  const auto& first_links = links.begin()->second;
  NodeId prev = start;
  NodeId cur = std::min(first_links[0], first_links[1]);
  ring.push_back(start);
  while (cur != start) {
    ring.push_back(cur);
    const auto& l = links[cur];
    const NodeId next = l[0] == prev ? l[1] : l[0];
    prev = cur;
    cur = next;
    if (ring.size() > sharers.size()) return std::nullopt;
  }
  if (ring.size() != sharers.size()) return std::nullopt;
  return ring;
}

bool same_volume(double before, double after) {
  return std::abs(after - before) <= 1e-10 * before;
}

void install(Mesh& mesh, std::vector<ElemId> old_ids, const std::vector<NodeQuad>& tets) {
  std::sort(old_ids.begin(), old_ids.end());
  const std::size_t reuse = std::min(old_ids.size(), tets.size());
  for (std::size_t i = 0; i < reuse; ++i) mesh.replace_element(old_ids[i], oriented(mesh, tets[i]));
  for (std::size_t i = reuse; i < tets.size(); ++i) mesh.add_element(tets[i]);
  for (std::size_t i = old_ids.size(); i-- > reuse;) mesh.remove_element(old_ids[i]);
}

}  // namespace

double insphere(const TetPoints& t, const Point3& p) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d d = t[i] - p;
    m.row(i) << d.x(), d.y(), d.z(), d.squaredNorm();
  }
  return -m.determinant();
}

bool inside_circumsphere(const TetPoints& t, const Point3& p) {
  double scale = 0.0;
  for (const auto& q : t) scale = std::max(scale, (q - p).norm());
  const double s5 = std::pow(scale, 5);
  double len = 0.0;
  for (int i = 1; i < 4; ++i) len = std::max(len, (t[i] - t[0]).norm());
  const double v = tet_volume(t);
  if (std::abs(v) <= 1e-12 * len * len * len) return true;
  const double det = insphere(t, p) * (v > 0.0 ? 1.0 : -1.0);
  return det > kInsphereTolerance * s5;
}

bool delaunay_violated(const Mesh& mesh, ElemId e) {
  const auto& nd = mesh.element(e).nodes;
  const auto t = mesh.points(e);
  for (NodeId n = 0; n < mesh.node_count(); ++n) {
    if (std::find(nd.begin(), nd.end(), n) != nd.end()) continue;
    if (inside_circumsphere(t, mesh.node(n).position)) return true;
  }
  return false;
}

FlipResult flip_3to2(Mesh& mesh, const EdgeKey& edge) {
  const auto span = mesh.elements_of_edge(edge.lo, edge.hi);
  if (span.size() != 3) return FlipResult::NotApplicable;
  const std::vector<ElemId> sharers(span.begin(), span.end());
  const auto ring = edge_ring(mesh, edge);
  if (!ring) return FlipResult::NotApplicable;

  std::vector<NodeQuad> current;
  for (ElemId e : sharers) current.push_back(mesh.element(e).nodes);
  std::vector<NodeId> verts{edge.lo, edge.hi, (*ring)[0], (*ring)[1], (*ring)[2]};
  const double before = config_violation(mesh, current, verts);
  if (before <= 0.0) return FlipResult::NoViolation;

  const auto& r = *ring;
  const std::vector<NodeQuad> next{{r[0], r[1], r[2], edge.lo}, {r[0], r[1], r[2], edge.hi}};
  double old_volume = 0.0;
  for (ElemId e : sharers) old_volume += mesh.element(e).volume;
  const auto [new_volume, smallest] = config_volumes(mesh, next);
  if (!(smallest > mesh.degenerate_tolerance()) || !same_volume(old_volume, new_volume))
    return FlipResult::Invalid;
  if (!(config_violation(mesh, next, verts) < before)) return FlipResult::NotImproving;
  install(mesh, sharers, next);
  return FlipResult::Done;
}

FlipResult flip_4to4(Mesh& mesh, const EdgeKey& edge) {
  const auto span = mesh.elements_of_edge(edge.lo, edge.hi);
  if (span.size() != 4) return FlipResult::NotApplicable;
  const std::vector<ElemId> sharers(span.begin(), span.end());
  const auto ring = edge_ring(mesh, edge);
  if (!ring) return FlipResult::NotApplicable;
  const auto& c = *ring;
  const NodeId a = edge.lo, b = edge.hi;

  std::vector<NodeQuad> current;
  for (ElemId e : sharers) current.push_back(mesh.element(e).nodes);
  const std::vector<NodeId> verts{a, b, c[0], c[1], c[2], c[3]};
  const double before = config_violation(mesh, current, verts);
  if (before <= 0.0) return FlipResult::NoViolation;

  double old_volume = 0.0;
  for (ElemId e : sharers) old_volume += mesh.element(e).volume;

  const std::array<std::vector<NodeQuad>, 2> candidates{
      std::vector<NodeQuad>{{c[0], c[2], a, c[1]},
                            {c[0], c[2], c[1], b},
                            {c[0], c[2], b, c[3]},
                            {c[0], c[2], c[3], a}},
      std::vector<NodeQuad>{{c[1], c[3], a, c[2]},
                            {c[1], c[3], c[2], b},
                            {c[1], c[3], b, c[0]},
                            {c[1], c[3], c[0], a}}};
  int chosen = -1;
  double chosen_violation = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2; ++k) {
    const auto [vol, smallest] = config_volumes(mesh, candidates[k]);
    if (!(smallest > mesh.degenerate_tolerance()) || !same_volume(old_volume, vol)) continue;
    const double v = config_violation(mesh, candidates[k], verts);
    if (v < chosen_violation) {
      chosen = k;
      chosen_violation = v;
    }
  }
  if (chosen < 0) return FlipResult::Invalid;
  if (!(chosen_violation < before)) return FlipResult::NotImproving;
  install(mesh, sharers, candidates[static_cast<std::size_t>(chosen)]);
  return FlipResult::Done;
}

SliverResult remove_boundary_sliver(Mesh& mesh, const Domain& domain, ElemId e,
                                    double min_volume) {
  const auto nd = mesh.element(e).nodes;
  if (!(mesh.element(e).volume < min_volume)) return SliverResult::NotEligible;
  int inner = -1;
  for (int i = 0; i < 4; ++i) {
    if (mesh.node(nd[i]).is_outer()) continue;
    if (inner >= 0) return SliverResult::NotEligible;
    inner = i;
  }
  if (inner < 0) return SliverResult::NotEligible;
  std::array<NodeId, 3> face{};
  int k = 0;
  for (int i = 0; i < 4; ++i)
    if (i != inner) face[k++] = nd[i];
  if (mesh.face_multiplicity(face[0], face[1], face[2]) != 1) return SliverResult::NotEligible;
  const int s = domain.face_surface(mesh.node(face[0]).surfaces & mesh.node(face[1]).surfaces &
                                    mesh.node(face[2]).surfaces);
  if (s < 0) return SliverResult::NotEligible;

  const NodeId moving = nd[static_cast<std::size_t>(inner)];
  Point3 target = (mesh.node(face[0]).position + mesh.node(face[1]).position +
                   mesh.node(face[2]).position) /
                  3.0;
  if (!domain.surface(s).planar()) target = domain.surface(s).project(target);

  const double floor = mesh.degenerate_tolerance();
  for (ElemId other : mesh.elements_of_node(moving)) {
    if (other == e) continue;
    if (!(tet_volume(mesh.points_with(other, moving, target)) > floor))
      return SliverResult::RolledBack;
  }
  mesh.remove_element(e);
  mesh.move_node(moving, target);
  mesh.set_node_surfaces(moving, SurfaceMask{1} << s);
  return SliverResult::Removed;
}

std::string FlipReport::csv_header() {
  return "passes,flips_3to2,flips_4to4,slivers_removed,sliver_rollbacks,volume_before,volume_after";
}

std::string FlipReport::csv_line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%zu,%zu,%.17g,%.17g", passes, flips_3to2, flips_4to4,
                slivers_removed, sliver_rollbacks, volume_before, volume_after);
  return buf;
}

FlipReport improve_pass(Mesh& mesh, const Domain& domain, const ImproveConfig& cfg,
                        const std::function<void(const Mesh&, int)>& observer) {
  FlipReport report;
  report.volume_before = mesh.total_volume();
  for (int pass = 0; pass < cfg.max_passes; ++pass) {
    std::size_t fired = 0;
    for (const auto& edge : mesh.edges()) {
      const auto n = mesh.elements_of_edge(edge.lo, edge.hi).size();
      if (n == 3 && flip_3to2(mesh, edge) == FlipResult::Done) {
        ++report.flips_3to2;
        ++fired;
      } else if (n == 4 && flip_4to4(mesh, edge) == FlipResult::Done) {
        ++report.flips_4to4;
        ++fired;
      }
    }
    ++report.passes;
    if (observer) observer(mesh, pass);
    if (fired == 0) break;
  }
  if (cfg.min_volume > 0.0) {
    for (std::size_t i = mesh.element_count(); i-- > 0;) {
      if (i >= mesh.element_count()) continue;
      const auto r = remove_boundary_sliver(mesh, domain, static_cast<ElemId>(i), cfg.min_volume);
      if (r == SliverResult::Removed) ++report.slivers_removed;
      if (r == SliverResult::RolledBack) ++report.sliver_rollbacks;
    }
  }
  report.volume_after = mesh.total_volume();
  return report;
}

}  // namespace tetrodiff::delaunay
