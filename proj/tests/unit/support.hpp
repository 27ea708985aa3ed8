#pragma once

#include <array>
#include <numbers>

#include "tetrodiff/mesh.hpp"
#include "tetrodiff/rng.hpp"

namespace tetrodiff::testing {

inline constexpr double kPi = std::numbers::pi;

/// (nx x ny x nz) block of unit cubes, each split into six Kuhn tetrahedra, scaled by
/// `spacing`. Nodes on the block surface get surface bits 0..5 (x_lo, x_hi, y_lo, ...).
/// `jitter` moves inner nodes by up to jitter * spacing in each coordinate.
inline Mesh kuhn_block(int nx, int ny, int nz, double spacing = 1.0, double jitter = 0.0,
                       Rng* rng = nullptr) {
  Mesh m;
  const auto id = [&](int i, int j, int k) {
    return static_cast<NodeId>(i + (nx + 1) * (j + (ny + 1) * k));
  };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        Node n;
        const int c[3] = {i, j, k};
        const int hi[3] = {nx, ny, nz};
        for (int a = 0; a < 3; ++a) {
          if (c[a] == 0) n.surfaces |= SurfaceMask{1} << (2 * a);
          if (c[a] == hi[a]) n.surfaces |= SurfaceMask{1} << (2 * a + 1);
        }
        n.position = Point3(i, j, k) * spacing;
        if (!n.surfaces && rng && jitter > 0.0)
          n.position += jitter * spacing *
                        Point3(rng->uniform() - 0.5, rng->uniform() - 0.5, rng->uniform() - 0.5);
        m.add_node(n);
      }
  static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (const auto& perm : perms) {
          int c[3] = {0, 0, 0};
          std::array<NodeId, 4> nd{};
          nd[0] = id(i, j, k);
          for (int s = 0; s < 3; ++s) {
            c[perm[s]] = 1;
            nd[static_cast<std::size_t>(s + 1)] = id(i + c[0], j + c[1], k + c[2]);
          }
          m.add_element(nd);
        }
  return m;
}

inline TetPoints random_tet(Rng& rng, double min_volume = 1e-3) {
  for (;;) {
    TetPoints p;
    for (auto& q : p)
      q = Point3(rng.uniform(), rng.uniform(), rng.uniform()) * 4.0 - Point3::Constant(2.0);
    const double v = tet_volume(p);
    if (std::abs(v) < min_volume) continue;
    if (v < 0) std::swap(p[2], p[3]);
    return p;
  }
}

}  // namespace tetrodiff::testing
