#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tetrodiff/geometry.hpp"

namespace tetrodiff::oracles {

struct SeriesConfig {
  /// Largest index kept in each sum (only odd indices contribute on the cube).
  int max_index = 101;
  /// Terms whose exponential decay factor falls below this are dropped (t > 0 only).
  double tail_tol = 1e-14;

  void validate() const;
};

/// Harmonic function on [0,pi]^3 equal to phi0 on x = pi and 0 on the other faces:
///   (16 phi0 / pi^2) sum_{n,m odd} sinh(k x) sin(n y) sin(m z) / (n m sinh(k pi)),
/// k = sqrt(n^2 + m^2). The sinh ratio is evaluated without overflow.
double laplace_cube_oracle(const Point3& p, double phi0, const SeriesConfig& cfg = {});

/// 1 / (4 pi r), r = |p - charge|. Throws OracleError at r = 0.
double point_charge_oracle(const Point3& p, const Point3& charge);

/// Heat equation on [0,pi]^3, zero boundary values, constant initial value g0:
///   (64 g0 / pi^3) sum_{odd} sin(kx x) sin(ky y) sin(kz z) exp(-(kx^2+ky^2+kz^2) D t) / (kx ky kz).
double diffusion_cube_oracle(const Point3& p, double t, double g0, double D,
                             const SeriesConfig& cfg = {});

/// Same problem with initial value x(pi-x) y(pi-y) z(pi-z): coefficients (8/pi)^3 / (kx ky kz)^3.
double diffusion_cube_polynomial_oracle(const Point3& p, double t, double D,
                                        const SeriesConfig& cfg = {});

/// J_n(x).
double bessel_j(int n, double x);

/// First `count` positive zeros of J_n, bracketed by sign changes and refined to 1e-12.
std::vector<double> bessel_zeros(int n, int count);

/// Eigen-expansion of the heat equation in the cylinder r <= r0, 0 <= z <= height with zero
/// boundary values:
///   u = sum_{n,m,p} J_n(k_nm r / r0) (a cos(n theta) + b sin(n theta)) sin(p pi z / height)
///       exp(-((k_nm / r0)^2 + (p pi / height)^2) D t).
struct CylinderSeries {
  double r0 = 1.0;
  double height = 1.0;
  int n_max = 0;  ///< angular orders 0..n_max
  int m_max = 1;  ///< radial zeros 1..m_max
  int p_max = 1;  ///< axial modes 1..p_max
  std::vector<std::vector<double>> zeros;  ///< zeros[n][m-1]
  /// a[n][m-1][p-1], b[n][m-1][p-1]
  std::vector<std::vector<std::vector<double>>> a, b;
};

struct CylinderQuadrature {
  int radial = 200;
  int angular = 64;
  int axial = 200;
};

/// Coefficients of an initial condition g(r, theta, z) by orthogonality, evaluated with
/// midpoint quadrature.
CylinderSeries cylinder_coefficients(const std::function<double(double, double, double)>& g,
                                     double r0, double height, int n_max, int m_max, int p_max,
                                     const CylinderQuadrature& quad = {});

double diffusion_cylinder_oracle(double r, double theta, double z, double t, double D,
                                 const CylinderSeries& series);

struct DifferenceSummary {
  std::vector<double> values;
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
};

/// (num - anal) / max|anal| per node, with mean and standard deviation.
/// Throws OracleError for mismatched lengths or an all-zero analytical field.
DifferenceSummary relative_difference(std::span<const double> numerical,
                                      std::span<const double> analytical);

}  // namespace tetrodiff::oracles
