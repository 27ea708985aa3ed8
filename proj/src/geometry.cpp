#include "tetrodiff/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "tetrodiff/error.hpp"

namespace tetrodiff {

double tet_volume(const Point3& p0, const Point3& p1, const Point3& p2, const Point3& p3) {
  const Eigen::Vector3d e1 = p1 - p0;
  const Eigen::Vector3d e2 = p2 - p0;
  const Eigen::Vector3d e3 = p3 - p0;
  return e1.dot(e2.cross(e3)) / 6.0;
}

std::array<Eigen::Vector3d, 4> shape_gradients(const TetPoints& p) {
  const Eigen::Vector3d e1 = p[1] - p[0];
  const Eigen::Vector3d e2 = p[2] - p[0];
  const Eigen::Vector3d e3 = p[3] - p[0];
  const double six_v = e1.dot(e2.cross(e3));
  std::array<Eigen::Vector3d, 4> g;
  g[1] = e2.cross(e3) / six_v;
  g[2] = e3.cross(e1) / six_v;
  g[3] = e1.cross(e2) / six_v;
  g[0] = -(g[1] + g[2] + g[3]);
  return g;
}

ShapeCoeffs shape_coeffs(const TetPoints& p, double degenerate_tol) {
  const double v = tet_volume(p);
  if (!(v > degenerate_tol)) {
    throw GeometryError("shape_coeffs: degenerate or inverted element (volume " +
                        std::to_string(v) + ")");
  }
  const auto grad = shape_gradients(p);
  ShapeCoeffs s;
  s.volume = v;
  const double six_v = 6.0 * v;
  for (int i = 0; i < 4; ++i) {
    s.b[i] = six_v * grad[i].x();
    s.c[i] = six_v * grad[i].y();
    s.d[i] = six_v * grad[i].z();
    // L_i(p0) = delta_i0 fixes the constant term.
    s.a[i] = six_v * ((i == 0 ? 1.0 : 0.0) - grad[i].dot(p[0]));
  }
  return s;
}

bool circumsphere(const TetPoints& p, Point3& center, double& radius_sq) {
  Eigen::Matrix3d a;
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d e = p[i + 1] - p[0];
    a.row(i) = e.transpose();
    rhs[i] = 0.5 * e.squaredNorm();
  }
  const double det = a.determinant();
  double scale = 0.0;
  for (int i = 0; i < 3; ++i) scale = std::max(scale, a.row(i).norm());
  if (std::abs(det) <= 1e-12 * scale * scale * scale) return false;
  const Eigen::Vector3d off = a.partialPivLu().solve(rhs);
  center = p[0] + off;
  radius_sq = off.squaredNorm();
  return true;
}

double longest_edge(const TetPoints& p) {
  double best = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) best = std::max(best, (p[i] - p[j]).norm());
  return best;
}

}  // namespace tetrodiff
