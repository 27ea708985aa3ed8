#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tetrodiff/geometry.hpp"

namespace tetrodiff {

/// Bit i set means "lies on surface i" of the owning Domain. Zero means interior.
using SurfaceMask = std::uint32_t;

inline int surface_count(SurfaceMask m) { return __builtin_popcount(m); }

/// One analytic boundary patch. Curves and corners are intersections of these.
struct Surface {
  enum class Kind { Plane, Sphere, Cylinder, Cone, Point };

  Kind kind = Kind::Plane;
  std::string name;
  // Plane: coordinate `axis` equals `value`.
  int axis = 0;
  double value = 0.0;
  // Sphere: center/radius. Cylinder and Cone: axis parallel to z through (center.x, center.y).
  // Point: the fixed location is `center`.
  Point3 center = Point3::Zero();
  double radius = 0.0;
  // Cone: radius `radius` at z_base, zero at z_apex.
  double z_base = 0.0;
  double z_apex = 0.0;

  bool planar() const { return kind == Kind::Plane; }
  /// Distance-like measure of how far `p` is from the surface.
  double residual(const Point3& p) const;
  /// Moves `p` onto the surface. Radial (fixed z) for cylinder and cone.
  Point3 project(const Point3& p) const;
};

struct CubeShape {
  Point3 lo = Point3::Zero();
  Point3 hi = Point3::Ones();
};

struct CylinderShape {
  double cx = 0.0, cy = 0.0;
  double radius = 1.0;
  double z_lo = 0.0, z_hi = 1.0;
};

struct SphereShape {
  Point3 center = Point3::Zero();
  double radius = 1.0;
};

/// Base disk of `base_radius` at z_lo, tapering linearly to zero at z_apex >= z_hi.
/// z_apex == z_hi gives a full cone ending in an apex node; otherwise a frustum.
struct ConeShape {
  double cx = 0.0, cy = 0.0;
  double base_radius = 1.0;
  double z_lo = 0.0, z_hi = 1.0;
  double z_apex = 1.0;
};

using Shape = std::variant<CubeShape, CylinderShape, SphereShape, ConeShape>;

struct DomainSpec {
  Shape shape = CubeShape{};
  int layer_count = 3;
  /// Cube: nodes on each side of a square layer (corners included).
  /// Round shapes: nodes on each layer circle.
  int nodes_per_layer_edge = 4;
};

/// A validated domain with its analytic boundary surfaces.
class Domain {
 public:
  explicit Domain(DomainSpec spec);

  const DomainSpec& spec() const { return spec_; }
  const std::vector<Surface>& surfaces() const { return surfaces_; }
  const Surface& surface(int i) const { return surfaces_.at(static_cast<std::size_t>(i)); }
  std::string shape_name() const;
  double exact_volume() const;
  /// Axis-aligned bounding box diagonal.
  double bbox_diagonal() const;

  /// Projects onto the intersection of the surfaces in `mask`: point features first,
  /// then planes, then curved patches.
  Point3 project(const Point3& p, SurfaceMask mask) const;
  /// Largest residual over the surfaces in `mask`.
  double residual(const Point3& p, SurfaceMask mask) const;
  /// Nodes on curves, corners or point features do not move during smoothing.
  bool is_frozen(SurfaceMask mask) const;
  /// Surface of a boundary face whose vertex masks AND to `common`; -1 if none.
  int face_surface(SurfaceMask common) const;

 private:
  DomainSpec spec_;
  std::vector<Surface> surfaces_;
};

}  // namespace tetrodiff
