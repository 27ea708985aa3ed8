#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "support.hpp"
#include "tetrodiff/error.hpp"
#include "tetrodiff/oracles.hpp"

using namespace tetrodiff;
using namespace tetrodiff::oracles;
using tetrodiff::testing::kPi;

namespace {

double fd_laplacian(const std::function<double(const Point3&)>& f, const Point3& p, double h) {
  double s = -6.0 * f(p);
  for (int a = 0; a < 3; ++a) {
    Point3 e = Point3::Zero();
    e[a] = h;
    s += f(p + e) + f(p - e);
  }
  return s / (h * h);
}

}  // namespace

TEST(Oracles, LaplaceCubeBoundaryValues) {
  EXPECT_NEAR(laplace_cube_oracle(Point3(0.0, 1.0, 2.0), 1.0), 0.0, 1e-15);
  EXPECT_NEAR(laplace_cube_oracle(Point3(1.0, 0.0, 2.0), 1.0), 0.0, 1e-12);
  EXPECT_NEAR(laplace_cube_oracle(Point3(kPi, kPi / 2, kPi / 2), 1.0), 1.0, 0.02);
  EXPECT_NEAR(laplace_cube_oracle(Point3(kPi, kPi / 2, kPi / 2), 2.5),
              2.5 * laplace_cube_oracle(Point3(kPi, kPi / 2, kPi / 2), 1.0), 1e-14);
}

TEST(Oracles, LaplaceCubeSymmetryAndHarmonicity) {
  const Point3 p(1.7, 0.9, 2.1);
  EXPECT_NEAR(laplace_cube_oracle(p, 1.0), laplace_cube_oracle(Point3(1.7, 2.1, 0.9), 1.0), 1e-14);
  EXPECT_NEAR(laplace_cube_oracle(p, 1.0),
              laplace_cube_oracle(Point3(1.7, kPi - 0.9, 2.1), 1.0), 1e-14);
  const auto f = [](const Point3& q) { return laplace_cube_oracle(q, 1.0); };
  EXPECT_LT(std::abs(fd_laplacian(f, p, 1e-3)), 1e-4);
  // The centre value of a harmonic function with one face at 1 is 1/6.
  EXPECT_NEAR(f(Point3::Constant(kPi / 2)), 1.0 / 6.0, 1e-12);
}

TEST(Oracles, LaplaceCubeAgreesWithFiniteDifferences) {
  // 7-point scheme on a uniform grid; compare at nodes away from the discontinuous edges.
  const int n = 32;
  const double h = kPi / n;
  const int m = n - 1;
  const auto idx = [&](int i, int j, int k) { return i - 1 + m * (j - 1 + m * (k - 1)); };
  std::vector<Eigen::Triplet<double>> t;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m * m * m);
  for (int k = 1; k <= m; ++k)
    for (int j = 1; j <= m; ++j)
      for (int i = 1; i <= m; ++i) {
        const int r = idx(i, j, k);
        t.emplace_back(r, r, 6.0);
        const int nb[6][3] = {{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k},
                              {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}};
        for (const auto& q : nb) {
          if (q[0] == n) b[r] += 1.0;
          else if (q[0] > 0 && q[1] > 0 && q[2] > 0 && q[1] < n && q[2] < n)
            t.emplace_back(r, idx(q[0], q[1], q[2]), -1.0);
        }
      }
  Eigen::SparseMatrix<double> a(m * m * m, m * m * m);
  a.setFromTriplets(t.begin(), t.end());
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(a);
  cg.setTolerance(1e-12);
  const Eigen::VectorXd u = cg.solve(b);
  double worst = 0.0;
  for (int k = 4; k <= m - 3; ++k)
    for (int j = 4; j <= m - 3; ++j)
      for (int i = 1; i <= m - 3; ++i)
        worst = std::max(worst, std::abs(u[idx(i, j, k)] - laplace_cube_oracle(Point3(i, j, k) * h, 1.0)));
  EXPECT_LT(worst, 2e-3);
}

TEST(Oracles, PointCharge) {
  const Point3 q(0, 0, 2 * kPi);
  EXPECT_NEAR(point_charge_oracle(Point3(0, 0, 2 * kPi - 2.0), q), 1.0 / (8.0 * kPi), 1e-16);
  const auto f = [&](const Point3& p) { return point_charge_oracle(p, q); };
  EXPECT_LT(std::abs(fd_laplacian(f, Point3(0.3, -0.2, 0.5), 1e-3)), 1e-6);
  EXPECT_THROW(point_charge_oracle(q, q), OracleError);
}

TEST(Oracles, DiffusionCubeLimits) {
  const Point3 c = Point3::Constant(kPi / 2);
  EXPECT_NEAR(diffusion_cube_oracle(c, 0.01, 1.0, 1.0), 1.0, 1e-9);
  EXPECT_NEAR(diffusion_cube_oracle(Point3(0, 1, 1), 0.5, 1.0, 1.0), 0.0, 1e-15);
  // Late times: only the fundamental mode with rate 3 D survives.
  const double r = diffusion_cube_oracle(c, 3.0, 1.0, 1.0) / diffusion_cube_oracle(c, 4.0, 1.0, 1.0);
  EXPECT_NEAR(std::log(r), 3.0, 1e-9);
  EXPECT_NEAR(diffusion_cube_oracle(c, 3.0, 1.0, 1.0), 64.0 / (kPi * kPi * kPi) * std::exp(-9.0),
              1e-12);
}

TEST(Oracles, PolynomialInitialCondition) {
  for (const Point3& p : {Point3(0.4, 1.1, 2.9), Point3(1.5, 1.5, 1.5), Point3(3.0, 0.2, 1.0)}) {
    const double want = p.x() * (kPi - p.x()) * p.y() * (kPi - p.y()) * p.z() * (kPi - p.z());
    EXPECT_NEAR(diffusion_cube_polynomial_oracle(p, 0.0, 1.0), want, 1e-4);
  }
}

TEST(Oracles, SeriesConfigValidation) {
  SeriesConfig cfg;
  cfg.max_index = 0;
  EXPECT_THROW(cfg.validate(), OracleError);
}

TEST(Oracles, BesselAgreesWithLibrary) {
  for (int n = 0; n < 5; ++n)
    for (double x : {0.0, 0.1, 1.0, 3.7, 12.5, 40.0})
      EXPECT_NEAR(bessel_j(n, x), std::cyl_bessel_j(static_cast<double>(n), x), 1e-12) << n << " " << x;
}

TEST(Oracles, BesselZerosTable) {
  const auto z0 = bessel_zeros(0, 3);
  ASSERT_EQ(z0.size(), 3u);
  EXPECT_NEAR(z0[0], 2.404825557695773, 1e-12);
  EXPECT_NEAR(z0[1], 5.520078110286311, 1e-12);
  EXPECT_NEAR(z0[2], 8.653727912911012, 1e-12);
  EXPECT_NEAR(bessel_zeros(1, 1)[0], 3.831705970207512, 1e-12);
  EXPECT_NEAR(bessel_zeros(2, 2)[1], 8.417244140399865, 1e-12);
}

TEST(Oracles, CylinderSingleModeIsExact) {
  const double k = bessel_zeros(0, 1)[0];
  const auto g = [&](double r, double, double z) { return bessel_j(0, k * r) * std::sin(z); };
  const auto s = cylinder_coefficients(g, 1.0, kPi, 2, 3, 3);
  EXPECT_NEAR(s.a[0][0][0], 1.0, 1e-4);
  for (int n = 0; n <= 2; ++n)
    for (int m = 0; m < 3; ++m)
      for (int p = 0; p < 3; ++p) {
        EXPECT_NEAR(s.b[n][m][p], 0.0, 1e-6);
        if (n || m || p) EXPECT_NEAR(s.a[n][m][p], 0.0, 1e-4);
      }
  const double t = 0.3;
  EXPECT_NEAR(diffusion_cylinder_oracle(0.4, 1.0, 1.2, t, 1.0, s),
              g(0.4, 1.0, 1.2) * std::exp(-(k * k + 1.0) * t), 1e-4);
}

TEST(Oracles, CylinderAxisymmetricDataHasNoAngularModes) {
  const auto g = [](double r, double, double z) { return std::abs((r - 1.0) * z * (z - kPi)); };
  const auto s = cylinder_coefficients(g, 1.0, kPi, 2, 6, 7);
  for (int n = 1; n <= 2; ++n)
    for (int m = 0; m < 6; ++m)
      for (int p = 0; p < 7; ++p) {
        EXPECT_NEAR(s.a[n][m][p], 0.0, 1e-10);
        EXPECT_NEAR(s.b[n][m][p], 0.0, 1e-10);
      }
  EXPECT_NEAR(diffusion_cylinder_oracle(0.3, 0.0, kPi / 2, 0.0, 1.0, s), g(0.3, 0, kPi / 2), 0.05);
}

TEST(Oracles, RelativeDifferenceSummary) {
  const std::vector<double> anal{1.0, -2.0, 0.5};
  const std::vector<double> num{1.2, -2.0, 0.1};
  const auto s = relative_difference(num, anal);
  ASSERT_EQ(s.values.size(), 3u);
  EXPECT_NEAR(s.values[0], 0.1, 1e-15);
  EXPECT_NEAR(s.values[2], -0.2, 1e-15);
  EXPECT_NEAR(s.mean, -0.1 / 3.0, 1e-15);
  const double var = ((0.1 - s.mean) * (0.1 - s.mean) + s.mean * s.mean + (-0.2 - s.mean) * (-0.2 - s.mean)) / 3.0;
  EXPECT_NEAR(s.std, std::sqrt(var), 1e-15);
  EXPECT_THROW(relative_difference(std::vector<double>{1.0}, anal), OracleError);
  EXPECT_THROW(relative_difference(std::vector<double>{1.0}, std::vector<double>{0.0}), OracleError);
}
