#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "tetrodiff/domain.hpp"
#include "tetrodiff/mesh.hpp"

namespace tetrodiff::delaunay {

/// Relative tolerance of the in-sphere predicate.
inline constexpr double kInsphereTolerance = 1e-12;

/// In-sphere determinant, positive when `p` is inside the circumsphere of the
/// positively oriented tetrahedron `t`.
double insphere(const TetPoints& t, const Point3& p);

/// Strictly inside, with relative tolerance. A flat tetrahedron counts as "inside".
bool inside_circumsphere(const TetPoints& t, const Point3& p);

/// True iff some mesh node other than the element's own lies strictly inside its
/// circumsphere. Checks every node of the mesh.
bool delaunay_violated(const Mesh& mesh, ElemId e);

enum class FlipResult { Done, NotApplicable, NoViolation, Invalid, NotImproving };

/// Three elements around an interior edge become two sharing the ring triangle.
FlipResult flip_3to2(Mesh& mesh, const EdgeKey& edge);

/// Four elements around an interior edge are re-triangulated around one of the two
/// ring diagonals: the valid candidate with the lower maximum circumsphere violation.
FlipResult flip_4to4(Mesh& mesh, const EdgeKey& edge);

enum class SliverResult { Removed, NotEligible, RolledBack };

/// Collapses a small boundary element by moving its single inner node to the centroid
/// of the opposite boundary face (projected onto curved surfaces) and deleting it.
SliverResult remove_boundary_sliver(Mesh& mesh, const Domain& domain, ElemId e,
                                    double min_volume);

struct ImproveConfig {
  int max_passes = 20;
  /// Boundary elements below this volume are candidates for sliver removal.
  double min_volume = 0.0;
};

struct FlipReport {
  std::size_t flips_3to2 = 0;
  std::size_t flips_4to4 = 0;
  std::size_t slivers_removed = 0;
  std::size_t sliver_rollbacks = 0;
  int passes = 0;
  double volume_before = 0.0;
  double volume_after = 0.0;

  /// "passes,flips_3to2,flips_4to4,slivers_removed,sliver_rollbacks,volume_before,volume_after"
  std::string csv_line() const;
  static std::string csv_header();
};

/// Edge flips in ascending edge order, repeated until a pass fires nothing or
/// max_passes is reached, then one sliver-removal pass. The observer sees the mesh
/// after each flip pass.
FlipReport improve_pass(Mesh& mesh, const Domain& domain, const ImproveConfig& cfg,
                        const std::function<void(const Mesh&, int)>& observer = {});

}  // namespace tetrodiff::delaunay
