#include "tetrodiff/mesh_builder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>

#include "tetrodiff/error.hpp"

namespace tetrodiff {

double target_volume_for_edge(double h0) { return h0 * h0 * h0 * std::numbers::sqrt2 / 12.0; }

RefineConfig RefineConfig::from_edge(double h0) {
  RefineConfig c;
  c.target_edge = h0;
  c.target_volume = target_volume_for_edge(h0);
  c.critical_volume = c.target_volume / 4.0;
  c.split_volume = std::numbers::sqrt2 * c.target_volume;
  return c;
}

namespace {

struct Layer {
  double z = 0.0;
  bool collapsed = false;  // pole or apex: the whole ring is one node
  std::vector<NodeId> ring;
  NodeId center = 0;
};

struct RingPoint {
  double x, y;
  SurfaceMask lateral;
};

// Boundary curve of a layer as a closed polygon, counter-clockwise.
std::vector<RingPoint> cube_ring(const CubeShape& c, int n) {
  const double xs[4] = {c.lo.x(), c.hi.x(), c.hi.x(), c.lo.x()};
  const double ys[4] = {c.lo.y(), c.lo.y(), c.hi.y(), c.hi.y()};
  // Side s runs from corner s to corner s+1 and lies on this surface.
  const SurfaceMask side_bit[4] = {1u << 2, 1u << 1, 1u << 3, 1u << 0};
  std::vector<RingPoint> ring;
  for (int s = 0; s < 4; ++s) {
    const int t = (s + 1) % 4;
    for (int i = 0; i < n - 1; ++i) {
      const double f = static_cast<double>(i) / (n - 1);
      SurfaceMask m = side_bit[s];
      if (i == 0) m |= side_bit[(s + 3) % 4];
      ring.push_back({xs[s] + f * (xs[t] - xs[s]), ys[s] + f * (ys[t] - ys[s]), m});
    }
  }
  return ring;
}

std::vector<RingPoint> circle_ring(double cx, double cy, double r, int n, SurfaceMask lateral) {
  std::vector<RingPoint> ring;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    ring.push_back({cx + r * std::cos(a), cy + r * std::sin(a), lateral});
  }
  return ring;
}

double edge_length(const Mesh& mesh, const EdgeKey& e) {
  return (mesh.node(e.lo).position - mesh.node(e.hi).position).norm();
}

// Everything needed to carry out a division, computed without touching the mesh.
struct DivisionPlan {
  Node midpoint;
  std::vector<ElemId> sharers;
  double parent_volume = 0.0;
  double child_volume = 0.0;
};

std::optional<DivisionPlan> plan_division(const Mesh& mesh, const RefineConfig& cfg,
                                          const Domain& domain, NodeId a, NodeId b) {
  const auto sharers = mesh.elements_of_edge(a, b);
  if (sharers.empty()) return std::nullopt;
  bool oversized = false;
  for (ElemId e : sharers) oversized = oversized || mesh.element(e).volume > cfg.split_volume;
  if (!oversized) return std::nullopt;

  DivisionPlan plan;
  const Point3 mid = 0.5 * (mesh.node(a).position + mesh.node(b).position);
  plan.midpoint = classify_new_node(mid, mesh.node(a), mesh.node(b), domain,
                                    edge_boundary_mask(mesh, domain, a, b));
  const double floor = std::max(cfg.critical_volume, mesh.degenerate_tolerance());
  for (ElemId e : sharers) {
    const double v1 = tet_volume(mesh.points_with(e, b, plan.midpoint.position));
    const double v2 = tet_volume(mesh.points_with(e, a, plan.midpoint.position));
    if (v1 < floor || v2 < floor) return std::nullopt;
    plan.parent_volume += mesh.element(e).volume;
    plan.child_volume += v1 + v2;
  }
  plan.sharers.assign(sharers.begin(), sharers.end());
  return plan;
}

RefineStep apply_division(Mesh& mesh, const DivisionPlan& plan, NodeId a, NodeId b) {
  RefineStep step;
  step.edge = EdgeKey(a, b);
  step.new_node = mesh.add_node(plan.midpoint);
  for (ElemId e : plan.sharers) {
    const auto parent = mesh.element(e).nodes;
    auto first = parent;
    auto second = parent;
    for (int i = 0; i < 4; ++i) {
      if (parent[i] == b) first[i] = step.new_node;
      if (parent[i] == a) second[i] = step.new_node;
    }
    mesh.replace_element(e, first);
    mesh.add_element(second);
  }
  step.elements_split = plan.sharers.size();
  step.projection_volume_change = plan.child_volume - plan.parent_volume;
  return step;
}

}  // namespace

Mesh build_initial_mesh(const Domain& domain) {
  const auto& spec = domain.spec();
  const int L = spec.layer_count;
  const int n = spec.nodes_per_layer_edge;
  Mesh mesh;
  std::vector<Layer> layers(static_cast<std::size_t>(L));
  double cx = 0.0, cy = 0.0, z_lo = 0.0, z_hi = 0.0;

  // Surface ids follow Domain's construction order.
  SurfaceMask bottom_bit = 0, top_bit = 0;
  if (const auto* c = std::get_if<CubeShape>(&spec.shape)) {
    cx = 0.5 * (c->lo.x() + c->hi.x());
    cy = 0.5 * (c->lo.y() + c->hi.y());
    z_lo = c->lo.z();
    z_hi = c->hi.z();
    bottom_bit = 1u << 4;
    top_bit = 1u << 5;
  } else if (const auto* y = std::get_if<CylinderShape>(&spec.shape)) {
    cx = y->cx;
    cy = y->cy;
    z_lo = y->z_lo;
    z_hi = y->z_hi;
    bottom_bit = 1u << 0;
    top_bit = 1u << 1;
  } else if (const auto* s = std::get_if<SphereShape>(&spec.shape)) {
    cx = s->center.x();
    cy = s->center.y();
    z_lo = s->center.z() - s->radius;
    z_hi = s->center.z() + s->radius;
  } else if (const auto* k = std::get_if<ConeShape>(&spec.shape)) {
    cx = k->cx;
    cy = k->cy;
    z_lo = k->z_lo;
    z_hi = k->z_hi;
    bottom_bit = 1u << 0;
    top_bit = 1u << 2;  // top plane for a frustum, apex point for a full cone
  }

  for (int k = 0; k < L; ++k) {
    auto& layer = layers[static_cast<std::size_t>(k)];
    layer.z = z_lo + (z_hi - z_lo) * k / (L - 1);
    const bool first = k == 0;
    const bool last = k == L - 1;
    const SurfaceMask cap = first ? bottom_bit : (last ? top_bit : 0u);
    std::vector<RingPoint> ring;

    if (const auto* c = std::get_if<CubeShape>(&spec.shape)) {
      ring = cube_ring(*c, n);
    } else if (const auto* y = std::get_if<CylinderShape>(&spec.shape)) {
      ring = circle_ring(cx, cy, y->radius, n, 1u << 2);
    } else if (const auto* s = std::get_if<SphereShape>(&spec.shape)) {
      if (first || last) {
        layer.collapsed = true;
        layer.center = mesh.add_node({Point3(cx, cy, layer.z), 1u});
        continue;
      }
      const double dz = layer.z - s->center.z();
      const double r = std::sqrt(std::max(0.0, s->radius * s->radius - dz * dz));
      if (!(r > 0.0)) throw BuildError("sphere layer with zero radius");
      ring = circle_ring(cx, cy, r, n, 1u);
    } else if (const auto* k2 = std::get_if<ConeShape>(&spec.shape)) {
      const double r = k2->base_radius * (k2->z_apex - layer.z) / (k2->z_apex - k2->z_lo);
      if (last && k2->z_apex == k2->z_hi) {
        layer.collapsed = true;
        layer.center = mesh.add_node({Point3(cx, cy, layer.z), (1u << 1) | top_bit});
        continue;
      }
      if (!(r > 0.0)) throw BuildError("cone layer with zero radius below the apex");
      ring = circle_ring(cx, cy, r, n, 1u << 1);
    }

    layer.center = mesh.add_node({Point3(cx, cy, layer.z), cap});
    for (const auto& rp : ring)
      layer.ring.push_back(mesh.add_node({Point3(rp.x, rp.y, layer.z), rp.lateral | cap}));
  }

  std::size_t ring_size = 0;
  for (const auto& l : layers) ring_size = std::max(ring_size, l.ring.size());

  for (int k = 0; k + 1 < L; ++k) {
    const auto& lo = layers[static_cast<std::size_t>(k)];
    const auto& hi = layers[static_cast<std::size_t>(k + 1)];
    if (lo.collapsed && hi.collapsed) throw BuildError("two consecutive collapsed layers");
    const NodeId mid = mesh.add_node({Point3(cx, cy, 0.5 * (lo.z + hi.z)), 0u});
    auto ring_at = [](const Layer& l, std::size_t i) {
      return l.collapsed ? l.center : l.ring[i % l.ring.size()];
    };
    for (std::size_t i = 0; i < ring_size; ++i) {
      const NodeId a0 = ring_at(lo, i), a1 = ring_at(lo, i + 1);
      const NodeId b0 = ring_at(hi, i), b1 = ring_at(hi, i + 1);
      if (!lo.collapsed) mesh.add_element({mid, lo.center, a0, a1});
      if (!hi.collapsed) mesh.add_element({mid, hi.center, b0, b1});
      if (lo.collapsed) {
        mesh.add_element({mid, lo.center, b0, b1});
      } else if (hi.collapsed) {
        mesh.add_element({mid, a0, a1, hi.center});
      } else {
        mesh.add_element({mid, a0, a1, b1});
        mesh.add_element({mid, a0, b1, b0});
      }
    }
  }
  return mesh;
}

Node classify_new_node(const Point3& p, const Node& a, const Node& b, const Domain& domain,
                       SurfaceMask boundary_mask) {
  Node out;
  out.surfaces = a.surfaces & b.surfaces & boundary_mask;
  out.position = out.surfaces ? domain.project(p, out.surfaces) : p;
  return out;
}

SurfaceMask edge_boundary_mask(const Mesh& mesh, const Domain& domain, NodeId a, NodeId b) {
  const auto sharers = mesh.elements_of_edge(a, b);
  std::map<NodeId, int> third;
  for (ElemId e : sharers)
    for (NodeId n : mesh.element(e).nodes)
      if (n != a && n != b) ++third[n];
  SurfaceMask mask = 0;
  const SurfaceMask ab = mesh.node(a).surfaces & mesh.node(b).surfaces;
  for (const auto& [c, count] : third) {
    if (count != 1) continue;  // interior face
    const int s = domain.face_surface(ab & mesh.node(c).surfaces);
    if (s >= 0) mask |= SurfaceMask{1} << s;
  }
  return mask;
}

RefineStep refine_once(Mesh& mesh, const RefineConfig& cfg, const Domain& domain) {
  auto edges = mesh.edges();
  std::vector<std::pair<double, EdgeKey>> ranked;
  ranked.reserve(edges.size());
  for (const auto& e : edges) ranked.emplace_back(edge_length(mesh, e), e);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (const auto& [len, e] : ranked) {
    if (auto plan = plan_division(mesh, cfg, domain, e.lo, e.hi))
      return apply_division(mesh, *plan, e.lo, e.hi);
  }
  RefineStep s;
  s.saturated = true;
  return s;
}

RefineStats refine_to_target(Mesh& mesh, const RefineConfig& cfg, const Domain& domain,
                             const std::function<void(const Mesh&, const RefineStep&)>& observer) {
  struct Candidate {
    double length;
    EdgeKey edge;
    bool operator<(const Candidate& o) const {
      if (length != o.length) return length < o.length;
      return edge > o.edge;  // smaller key has priority on ties
    }
  };
  std::priority_queue<Candidate> queue;
  auto offer = [&](NodeId a, NodeId b) {
    for (ElemId e : mesh.elements_of_edge(a, b))
      if (mesh.element(e).volume > cfg.split_volume) {
        const EdgeKey key(a, b);
        queue.push({edge_length(mesh, key), key});
        return;
      }
  };
  for (const auto& e : mesh.edges()) offer(e.lo, e.hi);

  RefineStats stats;
  while (cfg.max_divisions < 0 || stats.divisions < static_cast<std::size_t>(cfg.max_divisions)) {
    if (queue.empty()) {
      stats.saturated = true;
      break;
    }
    const Candidate top = queue.top();
    queue.pop();
    const auto plan = plan_division(mesh, cfg, domain, top.edge.lo, top.edge.hi);
    if (!plan) continue;
    std::vector<NodeId> opposite;
    for (ElemId e : plan->sharers)
      for (NodeId n : mesh.element(e).nodes)
        if (n != top.edge.lo && n != top.edge.hi) opposite.push_back(n);
    const auto step = apply_division(mesh, *plan, top.edge.lo, top.edge.hi);
    ++stats.divisions;
    stats.projection_volume_change += step.projection_volume_change;
    std::sort(opposite.begin(), opposite.end());
    opposite.erase(std::unique(opposite.begin(), opposite.end()), opposite.end());
    offer(top.edge.lo, step.new_node);
    offer(top.edge.hi, step.new_node);
    for (NodeId c : opposite) offer(c, step.new_node);
    if (observer) observer(mesh, step);
  }
  stats.element_count = mesh.element_count();
  const auto ratios = volume_ratios(mesh, cfg.target_volume);
  stats.volume_histogram = make_histogram(ratios, 0.0, 3.0, 50);
  return stats;
}

}  // namespace tetrodiff
