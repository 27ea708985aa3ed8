#include "tetrodiff/oracles.hpp"

#include <cmath>
#include <numbers>

#include "tetrodiff/error.hpp"

namespace tetrodiff::oracles {

namespace {

constexpr double kPi = std::numbers::pi;

/// sinh(k x) / sinh(k pi) for 0 <= x <= pi without overflow.
double sinh_ratio(double k, double x) {
  return std::exp(k * (x - kPi)) * -std::expm1(-2.0 * k * x) / -std::expm1(-2.0 * k * kPi);
}

std::vector<double> odd_sines(double x, int max_index) {
  std::vector<double> s;
  for (int k = 1; k <= max_index; k += 2) s.push_back(std::sin(k * x));
  return s;
}

/// Odd-index triple sine series with coefficient c(kx) c(ky) c(kz) and decay exp(-|k|^2 D t).
double cube_heat_series(const Point3& p, double t, double D, const SeriesConfig& cfg,
                        double (*coeff)(int)) {
  cfg.validate();
  if (t < 0.0) throw OracleError("time must be >= 0");
  const auto sx = odd_sines(p.x(), cfg.max_index);
  const auto sy = odd_sines(p.y(), cfg.max_index);
  const auto sz = odd_sines(p.z(), cfg.max_index);
  const double rate = D * t;
  double sum = 0.0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    const int kx = 2 * static_cast<int>(i) + 1;
    for (std::size_t j = 0; j < sy.size(); ++j) {
      const int ky = 2 * static_cast<int>(j) + 1;
      const double kxy = kx * kx + ky * ky;
      if (rate > 0.0 && std::exp(-kxy * rate) < cfg.tail_tol) break;
      const double cxy = coeff(kx) * coeff(ky) * sx[i] * sy[j];
      for (std::size_t l = 0; l < sz.size(); ++l) {
        const int kz = 2 * static_cast<int>(l) + 1;
        const double decay = rate > 0.0 ? std::exp(-(kxy + kz * kz) * rate) : 1.0;
        if (rate > 0.0 && decay < cfg.tail_tol) break;
        sum += cxy * coeff(kz) * sz[l] * decay;
      }
    }
  }
  return sum;
}

double constant_coeff(int k) { return 4.0 / (kPi * k); }
double polynomial_coeff(int k) { return 8.0 / (kPi * k * k * k); }

}  // namespace

void SeriesConfig::validate() const {
  if (max_index < 1) throw OracleError("series truncation index must be >= 1");
  if (!(tail_tol > 0.0)) throw OracleError("tail tolerance must be positive");
}

double laplace_cube_oracle(const Point3& p, double phi0, const SeriesConfig& cfg) {
  cfg.validate();
  const auto sy = odd_sines(p.y(), cfg.max_index);
  const auto sz = odd_sines(p.z(), cfg.max_index);
  double sum = 0.0;
  for (std::size_t i = 0; i < sy.size(); ++i) {
    const int n = 2 * static_cast<int>(i) + 1;
    for (std::size_t j = 0; j < sz.size(); ++j) {
      const int m = 2 * static_cast<int>(j) + 1;
      const double k = std::sqrt(static_cast<double>(n * n + m * m));
      sum += sinh_ratio(k, p.x()) * sy[i] * sz[j] / (n * m);
    }
  }
  return 16.0 * phi0 / (kPi * kPi) * sum;
}

double point_charge_oracle(const Point3& p, const Point3& charge) {
  const double r = (p - charge).norm();
  if (!(r > 0.0)) throw OracleError("point charge oracle evaluated at the charge");
  return 1.0 / (4.0 * kPi * r);
}

double diffusion_cube_oracle(const Point3& p, double t, double g0, double D, const SeriesConfig& cfg) {
  return g0 * cube_heat_series(p, t, D, cfg, constant_coeff);
}

double diffusion_cube_polynomial_oracle(const Point3& p, double t, double D, const SeriesConfig& cfg) {
  return cube_heat_series(p, t, D, cfg, polynomial_coeff);
}

double bessel_j(int n, double x) { return std::cyl_bessel_j(static_cast<double>(n), x); }

std::vector<double> bessel_zeros(int n, int count) {
  if (n < 0 || count < 0) throw OracleError("bessel_zeros: order and count must be >= 0");
  std::vector<double> zeros;
  const double step = 0.05;
  double x0 = std::max(0.5 * n, step);
  double f0 = bessel_j(n, x0);
  while (static_cast<int>(zeros.size()) < count) {
    const double x1 = x0 + step;
    const double f1 = bessel_j(n, x1);
    if (f0 == 0.0) {
      zeros.push_back(x0);
    } else if (f0 * f1 < 0.0) {
      double lo = x0, hi = x1, flo = f0;
      while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bessel_j(n, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      double x = 0.5 * (lo + hi);
      // Secant polish.
      double xp = x - 1e-7;
      for (int k = 0; k < 3; ++k) {
        const double fx = bessel_j(n, x), fp = bessel_j(n, xp);
        if (fx == fp) break;
        const double xn = x - fx * (x - xp) / (fx - fp);
        if (!(std::abs(xn - x) < 1e-10)) break;
        xp = x;
        x = xn;
      }
      zeros.push_back(x);
    }
    x0 = x1;
    f0 = f1;
  }
  return zeros;
}

CylinderSeries cylinder_coefficients(const std::function<double(double, double, double)>& g,
                                     double r0, double height, int n_max, int m_max, int p_max,
                                     const CylinderQuadrature& quad) {
  if (!(r0 > 0.0) || !(height > 0.0)) throw OracleError("cylinder radius and height must be positive");
  if (n_max < 0 || m_max < 1 || p_max < 1) throw OracleError("cylinder series sizes out of range");
  if (quad.radial < 1 || quad.angular < 1 || quad.axial < 1) throw OracleError("quadrature sizes must be >= 1");

  CylinderSeries s;
  s.r0 = r0;
  s.height = height;
  s.n_max = n_max;
  s.m_max = m_max;
  s.p_max = p_max;
  for (int n = 0; n <= n_max; ++n) s.zeros.push_back(bessel_zeros(n, m_max));

  const int nr = quad.radial, nt = quad.angular, nz = quad.axial;
  const double hr = r0 / nr, ht = 2.0 * kPi / nt, hz = height / nz;

  // Axial projection: gz[p][i][j] = int g sin(p pi z / H) dz at (r_i, theta_j).
  std::vector<std::vector<std::vector<double>>> gz(
      static_cast<std::size_t>(p_max),
      std::vector<std::vector<double>>(static_cast<std::size_t>(nr), std::vector<double>(static_cast<std::size_t>(nt), 0.0)));
  for (int i = 0; i < nr; ++i) {
    const double r = (i + 0.5) * hr;
    for (int j = 0; j < nt; ++j) {
      const double th = (j + 0.5) * ht;
      for (int k = 0; k < nz; ++k) {
        const double z = (k + 0.5) * hz;
        const double v = g(r, th, z) * hz;
        for (int p = 1; p <= p_max; ++p) gz[p - 1][i][j] += v * std::sin(p * kPi * z / height);
      }
    }
  }

  s.a.assign(static_cast<std::size_t>(n_max + 1),
             std::vector<std::vector<double>>(static_cast<std::size_t>(m_max), std::vector<double>(static_cast<std::size_t>(p_max), 0.0)));
  s.b = s.a;
  for (int n = 0; n <= n_max; ++n) {
    for (int p = 1; p <= p_max; ++p) {
      // Angular projection at each radius.
      std::vector<double> gc(static_cast<std::size_t>(nr), 0.0), gs(static_cast<std::size_t>(nr), 0.0);
      for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nt; ++j) {
          const double th = (j + 0.5) * ht;
          gc[i] += gz[p - 1][i][j] * std::cos(n * th) * ht;
          gs[i] += gz[p - 1][i][j] * std::sin(n * th) * ht;
        }
      for (int m = 1; m <= m_max; ++m) {
        const double k = s.zeros[n][m - 1];
        double ic = 0.0, is = 0.0;
        for (int i = 0; i < nr; ++i) {
          const double r = (i + 0.5) * hr;
          const double w = bessel_j(n, k * r / r0) * r * hr;
          ic += gc[i] * w;
          is += gs[i] * w;
        }
        const double jn1 = bessel_j(n + 1, k);
        const double radial_norm = 0.5 * r0 * r0 * jn1 * jn1;
        const double angular_norm = n == 0 ? 2.0 * kPi : kPi;
        const double axial_norm = 0.5 * height;
        const double norm = radial_norm * angular_norm * axial_norm;
        s.a[n][m - 1][p - 1] = ic / norm;
        s.b[n][m - 1][p - 1] = n == 0 ? 0.0 : is / norm;
      }
    }
  }
  return s;
}

double diffusion_cylinder_oracle(double r, double theta, double z, double t, double D,
                                 const CylinderSeries& s) {
  if (t < 0.0) throw OracleError("time must be >= 0");
  double sum = 0.0;
  for (int n = 0; n <= s.n_max; ++n) {
    const double cn = std::cos(n * theta), sn = std::sin(n * theta);
    for (int m = 1; m <= s.m_max; ++m) {
      const double k = s.zeros[n][m - 1];
      const double radial = bessel_j(n, k * r / s.r0);
      for (int p = 1; p <= s.p_max; ++p) {
        const double kz = p * kPi / s.height;
        const double decay = std::exp(-((k / s.r0) * (k / s.r0) + kz * kz) * D * t);
        sum += radial * (s.a[n][m - 1][p - 1] * cn + s.b[n][m - 1][p - 1] * sn) * std::sin(kz * z) * decay;
      }
    }
  }
  return sum;
}

DifferenceSummary relative_difference(std::span<const double> numerical,
                                      std::span<const double> analytical) {
  if (numerical.size() != analytical.size())
    throw OracleError("relative_difference: length mismatch");
  double scale = 0.0;
  for (double v : analytical) scale = std::max(scale, std::abs(v));
  if (!(scale > 0.0)) throw OracleError("relative_difference: analytical field is zero");
  DifferenceSummary out;
  out.values.resize(numerical.size());
  for (std::size_t i = 0; i < numerical.size(); ++i)
    out.values[i] = (numerical[i] - analytical[i]) / scale;
  if (out.values.empty()) return out;
  double sum = 0.0;
  for (double v : out.values) sum += v;
  out.mean = sum / static_cast<double>(out.values.size());
  double var = 0.0;
  for (double v : out.values) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / static_cast<double>(out.values.size()));
  return out;
}

}  // namespace tetrodiff::oracles
