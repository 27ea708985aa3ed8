#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "tetrodiff/domain.hpp"
#include "tetrodiff/mesh.hpp"
#include "tetrodiff/quality.hpp"

namespace tetrodiff {

/// Volume of a regular tetrahedron with edge h0: h0^3 sqrt(2) / 12.
double target_volume_for_edge(double h0);

struct RefineConfig {
  double target_edge = 0.0;      ///< h0
  double target_volume = 0.0;    ///< V0
  double critical_volume = 0.0;  ///< no division may create a child below this
  /// An edge is a candidate only while some element sharing it is larger than this.
  double split_volume = 0.0;
  /// Negative means unlimited.
  long max_divisions = -1;

  /// V0 from h0, V_crit = V0/4, split_volume = sqrt(2) V0.
  static RefineConfig from_edge(double h0);
};

/// Builds the layered initial mesh: outer nodes on the layer boundary curves, one
/// node at each layer center and one on the axis halfway between consecutive layers.
Mesh build_initial_mesh(const Domain& domain);

/// Classifies the midpoint of edge (a, b). `boundary_mask` is the union of the surfaces
/// of the boundary faces that contain the edge (0 for an interior edge). The midpoint is
/// Outer on the surfaces shared by both parents and the edge's boundary faces, and is
/// projected onto their intersection; otherwise it is Inner.
Node classify_new_node(const Point3& p, const Node& a, const Node& b, const Domain& domain,
                       SurfaceMask boundary_mask = ~SurfaceMask{0});

/// Union of the surfaces of boundary faces containing edge (a, b).
SurfaceMask edge_boundary_mask(const Mesh& mesh, const Domain& domain, NodeId a, NodeId b);

struct RefineStep {
  bool saturated = false;
  EdgeKey edge;
  NodeId new_node = 0;
  std::size_t elements_split = 0;
  /// Child volume total minus parent volume total (nonzero only after boundary projection).
  double projection_volume_change = 0.0;
};

struct RefineStats {
  std::size_t divisions = 0;
  bool saturated = false;
  std::size_t element_count = 0;
  double projection_volume_change = 0.0;
  Histogram volume_histogram;
};

/// One division of the globally longest eligible edge (ties: smallest (lo, hi)).
/// Eligible: some sharer exceeds split_volume and every child keeps volume >= V_crit.
/// Splits every element sharing the edge through the midpoint and its two opposite vertices.
RefineStep refine_once(Mesh& mesh, const RefineConfig& cfg, const Domain& domain);

/// Repeats divisions until saturated or max_divisions reached. The observer, if set,
/// sees the mesh after each division.
RefineStats refine_to_target(Mesh& mesh, const RefineConfig& cfg, const Domain& domain,
                             const std::function<void(const Mesh&, const RefineStep&)>&
                                 observer = {});

}  // namespace tetrodiff
