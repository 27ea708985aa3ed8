#include "tetrodiff/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tetrodiff/error.hpp"

namespace tetrodiff {

namespace {

double cone_radius_at(const Surface& s, double z) {
  return s.radius * (s.z_apex - z) / (s.z_apex - s.z_base);
}

Point3 radial_to(const Point3& p, double cx, double cy, double r) {
  const double dx = p.x() - cx;
  const double dy = p.y() - cy;
  const double rho = std::hypot(dx, dy);
  if (rho == 0.0) return {cx + r, cy, p.z()};
  return {cx + dx * r / rho, cy + dy * r / rho, p.z()};
}

Surface plane(std::string name, int axis, double value) {
  Surface s;
  s.kind = Surface::Kind::Plane;
  s.name = std::move(name);
  s.axis = axis;
  s.value = value;
  return s;
}

}  // namespace

double Surface::residual(const Point3& p) const {
  switch (kind) {
    case Kind::Plane:
      return std::abs(p[axis] - value);
    case Kind::Sphere:
      return std::abs((p - center).norm() - radius);
    case Kind::Cylinder:
      return std::abs(std::hypot(p.x() - center.x(), p.y() - center.y()) - radius);
    case Kind::Cone:
      return std::abs(std::hypot(p.x() - center.x(), p.y() - center.y()) -
                      cone_radius_at(*this, p.z()));
    case Kind::Point:
      return (p - center).norm();
  }
  return 0.0;
}

Point3 Surface::project(const Point3& p) const {
  switch (kind) {
    case Kind::Plane: {
      Point3 q = p;
      q[axis] = value;
      return q;
    }
    case Kind::Sphere: {
      const Eigen::Vector3d d = p - center;
      const double n = d.norm();
      if (n == 0.0) return center + Eigen::Vector3d(0, 0, radius);
      return center + d * (radius / n);
    }
    case Kind::Cylinder:
      return radial_to(p, center.x(), center.y(), radius);
    case Kind::Cone:
      return radial_to(p, center.x(), center.y(), std::max(0.0, cone_radius_at(*this, p.z())));
    case Kind::Point:
      return center;
  }
  return p;
}

Domain::Domain(DomainSpec spec) : spec_(std::move(spec)) {
  if (spec_.layer_count < 2) throw BuildError("layer_count must be >= 2");
  if (spec_.nodes_per_layer_edge < 3) throw BuildError("nodes_per_layer_edge must be >= 3");

  if (const auto* c = std::get_if<CubeShape>(&spec_.shape)) {
    for (int a = 0; a < 3; ++a)
      if (!(c->hi[a] > c->lo[a])) throw BuildError("cube extents must be positive");
    const char* axes = "xyz";
    for (int a = 0; a < 3; ++a) {
      surfaces_.push_back(plane(std::string(1, axes[a]) + "_lo", a, c->lo[a]));
      surfaces_.push_back(plane(std::string(1, axes[a]) + "_hi", a, c->hi[a]));
    }
  } else if (const auto* y = std::get_if<CylinderShape>(&spec_.shape)) {
    if (!(y->radius > 0.0) || !(y->z_hi > y->z_lo))
      throw BuildError("cylinder radius and height must be positive");
    surfaces_.push_back(plane("bottom", 2, y->z_lo));
    surfaces_.push_back(plane("top", 2, y->z_hi));
    Surface lat;
    lat.kind = Surface::Kind::Cylinder;
    lat.name = "lateral";
    lat.center = Point3(y->cx, y->cy, 0.0);
    lat.radius = y->radius;
    surfaces_.push_back(lat);
  } else if (const auto* s = std::get_if<SphereShape>(&spec_.shape)) {
    if (!(s->radius > 0.0)) throw BuildError("sphere radius must be positive");
    if (spec_.layer_count < 3) throw BuildError("sphere needs at least 3 layers");
    Surface sph;
    sph.kind = Surface::Kind::Sphere;
    sph.name = "sphere";
    sph.center = s->center;
    sph.radius = s->radius;
    surfaces_.push_back(sph);
  } else if (const auto* k = std::get_if<ConeShape>(&spec_.shape)) {
    if (!(k->base_radius > 0.0) || !(k->z_hi > k->z_lo))
      throw BuildError("cone base radius and height must be positive");
    if (k->z_apex < k->z_hi)
      throw BuildError("cone apex lies inside the z-range: zero radius at a non-apex layer");
    surfaces_.push_back(plane("base", 2, k->z_lo));
    Surface lat;
    lat.kind = Surface::Kind::Cone;
    lat.name = "lateral";
    lat.center = Point3(k->cx, k->cy, 0.0);
    lat.radius = k->base_radius;
    lat.z_base = k->z_lo;
    lat.z_apex = k->z_apex;
    surfaces_.push_back(lat);
    if (k->z_apex > k->z_hi) {
      surfaces_.push_back(plane("top", 2, k->z_hi));
    } else {
      Surface apex;
      apex.kind = Surface::Kind::Point;
      apex.name = "apex";
      apex.center = Point3(k->cx, k->cy, k->z_apex);
      surfaces_.push_back(apex);
    }
  }
}

std::string Domain::shape_name() const {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CubeShape>) return "cube";
        else if constexpr (std::is_same_v<T, CylinderShape>) return "cylinder";
        else if constexpr (std::is_same_v<T, SphereShape>) return "sphere";
        else return "cone";
      },
      spec_.shape);
}

double Domain::exact_volume() const {
  constexpr double pi = std::numbers::pi;
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CubeShape>) {
          return (s.hi - s.lo).prod();
        } else if constexpr (std::is_same_v<T, CylinderShape>) {
          return pi * s.radius * s.radius * (s.z_hi - s.z_lo);
        } else if constexpr (std::is_same_v<T, SphereShape>) {
          return 4.0 / 3.0 * pi * s.radius * s.radius * s.radius;
        } else {
          const double h_full = s.z_apex - s.z_lo;
          const double r_top = s.base_radius * (s.z_apex - s.z_hi) / h_full;
          const double h = s.z_hi - s.z_lo;
          return pi * h / 3.0 *
                 (s.base_radius * s.base_radius + s.base_radius * r_top + r_top * r_top);
        }
      },
      spec_.shape);
}

double Domain::bbox_diagonal() const {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CubeShape>) {
          return (s.hi - s.lo).norm();
        } else if constexpr (std::is_same_v<T, SphereShape>) {
          return 2.0 * std::sqrt(3.0) * s.radius;
        } else if constexpr (std::is_same_v<T, CylinderShape>) {
          return std::sqrt(8.0 * s.radius * s.radius + (s.z_hi - s.z_lo) * (s.z_hi - s.z_lo));
        } else {
          return std::sqrt(8.0 * s.base_radius * s.base_radius +
                           (s.z_hi - s.z_lo) * (s.z_hi - s.z_lo));
        }
      },
      spec_.shape);
}

Point3 Domain::project(const Point3& p, SurfaceMask mask) const {
  Point3 q = p;
  for (std::size_t i = 0; i < surfaces_.size(); ++i)
    if ((mask >> i & 1u) && surfaces_[i].kind == Surface::Kind::Point) return surfaces_[i].center;
  for (std::size_t i = 0; i < surfaces_.size(); ++i)
    if ((mask >> i & 1u) && surfaces_[i].planar()) q = surfaces_[i].project(q);
  for (std::size_t i = 0; i < surfaces_.size(); ++i)
    if ((mask >> i & 1u) && !surfaces_[i].planar()) q = surfaces_[i].project(q);
  return q;
}

double Domain::residual(const Point3& p, SurfaceMask mask) const {
  double r = 0.0;
  for (std::size_t i = 0; i < surfaces_.size(); ++i)
    if (mask >> i & 1u) r = std::max(r, surfaces_[i].residual(p));
  return r;
}

bool Domain::is_frozen(SurfaceMask mask) const {
  if (surface_count(mask) >= 2) return true;
  for (std::size_t i = 0; i < surfaces_.size(); ++i)
    if ((mask >> i & 1u) && surfaces_[i].kind == Surface::Kind::Point) return true;
  return false;
}

int Domain::face_surface(SurfaceMask common) const {
  if (common == 0) return -1;
  if (surface_count(common) == 1) return __builtin_ctz(common);
  // Three vertices on one curve: the face lies in the curve's plane.
  for (std::size_t i = 0; i < surfaces_.size(); ++i)
    if ((common >> i & 1u) && surfaces_[i].planar()) return static_cast<int>(i);
  return __builtin_ctz(common);
}

}  // namespace tetrodiff
