#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace tetrodiff {

using Point3 = Eigen::Vector3d;
using NodeId = std::uint32_t;
using ElemId = std::uint32_t;

using TetPoints = std::array<Point3, 4>;

/// Signed volume, one sixth of det[p1-p0, p2-p0, p3-p0]. Zero means degenerate.
double tet_volume(const Point3& p0, const Point3& p1, const Point3& p2, const Point3& p3);

inline double tet_volume(const TetPoints& p) { return tet_volume(p[0], p[1], p[2], p[3]); }

/// Coefficients of the area (barycentric) coordinates
///   L_i(x, y, z) = (a_i + b_i x + c_i y + d_i z) / (6 V)
/// of a positively oriented tetrahedron with volume V.
struct ShapeCoeffs {
  std::array<double, 4> a{}, b{}, c{}, d{};
  double volume = 0.0;

  double evaluate(int i, const Point3& p) const {
    return (a[i] + b[i] * p.x() + c[i] * p.y() + d[i] * p.z()) / (6.0 * volume);
  }
  Eigen::Vector3d gradient(int i) const {
    return Eigen::Vector3d(b[i], c[i], d[i]) / (6.0 * volume);
  }
};

/// Requires signed volume above `degenerate_tol`; throws GeometryError otherwise.
ShapeCoeffs shape_coeffs(const TetPoints& p, double degenerate_tol);

/// Gradients of L_0..L_3. Assumes a non-degenerate tetrahedron; sign follows orientation.
std::array<Eigen::Vector3d, 4> shape_gradients(const TetPoints& p);

/// Circumcenter and squared circumradius. Returns false for (near) coplanar points.
bool circumsphere(const TetPoints& p, Point3& center, double& radius_sq);

/// Longest edge length of a tetrahedron.
double longest_edge(const TetPoints& p);

}  // namespace tetrodiff
