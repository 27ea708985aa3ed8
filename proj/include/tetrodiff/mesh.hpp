#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tetrodiff/domain.hpp"
#include "tetrodiff/geometry.hpp"

namespace tetrodiff {

enum class NodeClass : std::uint8_t { Inner, Outer };

struct Node {
  Point3 position = Point3::Zero();
  /// Which boundary surfaces the node lies on; empty for inner nodes. Two or more
  /// bits place the node on a shape edge (curve) or corner.
  SurfaceMask surfaces = 0;

  NodeClass classification() const { return surfaces ? NodeClass::Outer : NodeClass::Inner; }
  bool is_outer() const { return surfaces != 0; }
};

struct TetElement {
  std::array<NodeId, 4> nodes{};
  /// Signed volume for the stored node order; positive in a valid mesh.
  double volume = 0.0;
};

/// Unordered node pair stored as (lo, hi).
struct EdgeKey {
  NodeId lo = 0, hi = 0;

  EdgeKey() = default;
  EdgeKey(NodeId a, NodeId b) : lo(a < b ? a : b), hi(a < b ? b : a) {}
  std::uint64_t packed() const { return (std::uint64_t{lo} << 32) | hi; }
  friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
  friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

/// Sorted node triple.
struct FaceKey {
  std::array<NodeId, 3> n{};
  FaceKey() = default;
  FaceKey(NodeId a, NodeId b, NodeId c);
  friend bool operator==(const FaceKey&, const FaceKey&) = default;
  friend auto operator<=>(const FaceKey&, const FaceKey&) = default;
};

struct BoundaryFace {
  FaceKey face;
  ElemId element = 0;
  /// Local index of the element vertex opposite this face.
  int opposite = 0;
};

struct ValidityReport {
  std::size_t inverted = 0;
  std::size_t bad_cached_volume = 0;
  std::size_t adjacency_errors = 0;
  std::size_t off_surface_nodes = 0;
  std::string first_problem;

  bool ok() const {
    return inverted == 0 && bad_cached_volume == 0 && adjacency_errors == 0 &&
           off_surface_nodes == 0;
  }
};

/// Tetrahedral mesh with node classification and incrementally maintained
/// node->elements and edge->elements adjacency.
class Mesh {
 public:
  Mesh() = default;

  NodeId add_node(const Node& node);
  /// Orients the element (swaps two nodes when the signed volume is negative).
  /// Throws GeometryError for repeated or out-of-range nodes, or volume <= degenerate_tolerance().
  ElemId add_element(std::array<NodeId, 4> nodes);
  /// Replaces the nodes of an element. Keeps the given order; the stored volume may be
  /// negative if the caller passes an inverted order.
  void replace_element(ElemId e, const std::array<NodeId, 4>& nodes);
  /// Swap-remove: the last element takes id `e`.
  void remove_element(ElemId e);

  /// Moves a node and refreshes the cached volumes of its star. No validity check.
  void move_node(NodeId n, const Point3& p);
  void set_node_surfaces(NodeId n, SurfaceMask mask) { nodes_[n].surfaces = mask; }
  /// Restores all positions at once (e.g. an annealing snapshot).
  void set_positions(std::span<const Point3> positions);
  std::vector<Point3> positions() const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t element_count() const { return elements_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<TetElement>& elements() const { return elements_; }
  const Node& node(NodeId n) const { return nodes_[n]; }
  const TetElement& element(ElemId e) const { return elements_[e]; }
  TetPoints points(ElemId e) const;
  /// Element points with node `n` placed at `p` (for trial moves).
  TetPoints points_with(ElemId e, NodeId n, const Point3& p) const;

  /// Rebuilds both adjacency maps from the element list.
  void build_adjacency();
  std::span<const ElemId> elements_of_node(NodeId n) const { return node_elems_[n]; }
  std::span<const ElemId> elements_of_edge(NodeId a, NodeId b) const;
  bool has_edge(NodeId a, NodeId b) const { return !elements_of_edge(a, b).empty(); }
  /// All edges in ascending key order.
  std::vector<EdgeKey> edges() const;
  /// Nodes sharing an edge with `n`, ascending.
  std::vector<NodeId> neighbors(NodeId n) const;

  /// Faces that belong to exactly one element, in ascending key order.
  std::vector<BoundaryFace> boundary_faces() const;
  /// Number of elements containing all three nodes.
  int face_multiplicity(NodeId a, NodeId b, NodeId c) const;

  double total_volume() const;
  double bbox_diagonal() const;
  /// 1e-12 * diag^3 of the node bounding box.
  double degenerate_tolerance() const;
  /// 1e-9 * diag of the node bounding box.
  double surface_tolerance() const;

  /// Checks cached volumes, orientation and adjacency; with a domain, also that
  /// outer nodes satisfy their surface equations.
  ValidityReport check_validity(const Domain* domain = nullptr) const;

 private:
  void attach(ElemId e);
  void detach(ElemId e);

  std::vector<Node> nodes_;
  std::vector<TetElement> elements_;
  std::vector<std::vector<ElemId>> node_elems_;
  std::unordered_map<std::uint64_t, std::vector<ElemId>> edge_elems_;
  Point3 bbox_lo_ = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 bbox_hi_ = Point3::Constant(-std::numeric_limits<double>::infinity());
};

/// The six local vertex pairs of a tetrahedron.
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

ShapeCoeffs shape_coeffs(const Mesh& mesh, ElemId e);

}  // namespace tetrodiff
