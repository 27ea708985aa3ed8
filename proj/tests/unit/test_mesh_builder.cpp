#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

#include "support.hpp"
#include "tetrodiff/domain.hpp"
#include "tetrodiff/error.hpp"
#include "tetrodiff/mesh_builder.hpp"
#include "tetrodiff/quality.hpp"

using namespace tetrodiff;
using tetrodiff::testing::kPi;

namespace {

std::vector<DomainSpec> all_shapes() {
  return {
      {CubeShape{Point3::Zero(), Point3(2, 1, 1.5)}, 3, 4},
      {CylinderShape{0.5, -0.5, 1.0, 0.0, 2.0}, 3, 8},
      {SphereShape{Point3(0, 0, 1), 1.0}, 5, 8},
      {ConeShape{0, 0, 1.0, 0.0, 2.0, 2.0}, 4, 8},
      {ConeShape{0, 0, 1.0, 0.0, 1.5, 2.5}, 3, 8},
  };
}

}  // namespace

TEST(MeshBuilder, TargetVolumeForEdge) {
  EXPECT_NEAR(target_volume_for_edge(0.2), 9.428090415820634e-4, 1e-15);
  EXPECT_NEAR(target_volume_for_edge(0.44), 0.0100390, 1e-7);
  EXPECT_NEAR(target_volume_for_edge(0.5), 0.0147314, 1e-7);
}

TEST(MeshBuilder, DefaultRefineThresholds) {
  const auto c = RefineConfig::from_edge(0.3);
  EXPECT_DOUBLE_EQ(c.critical_volume, c.target_volume / 4.0);
  EXPECT_DOUBLE_EQ(c.split_volume, std::numbers::sqrt2 * c.target_volume);
}

TEST(MeshBuilder, InvalidDomainsThrow) {
  EXPECT_THROW(Domain({SphereShape{Point3::Zero(), -1.0}, 5, 8}), BuildError);
  EXPECT_THROW(Domain({CubeShape{Point3::Zero(), Point3(1, 0, 1)}, 3, 4}), BuildError);
  EXPECT_THROW(Domain({CylinderShape{}, 1, 8}), BuildError);
  EXPECT_THROW(Domain({CubeShape{}, 3, 2}), BuildError);
}

TEST(MeshBuilder, InitialMeshValidOnEveryShape) {
  for (const auto& spec : all_shapes()) {
    const Domain d(spec);
    const Mesh m = build_initial_mesh(d);
    const auto r = m.check_validity(&d);
    EXPECT_TRUE(r.ok()) << d.shape_name() << ": " << r.first_problem;
    EXPECT_GT(m.element_count(), 0u);
    EXPECT_LE(m.total_volume(), d.exact_volume() * (1.0 + 1e-12)) << d.shape_name();
    EXPECT_GT(m.total_volume(), 0.5 * d.exact_volume()) << d.shape_name();
  }
}

TEST(MeshBuilder, InitialCubeFillsTheBoxExactly) {
  const Domain d({CubeShape{Point3::Zero(), Point3::Constant(kPi)}, 3, 4});
  const Mesh m = build_initial_mesh(d);
  EXPECT_NEAR(m.total_volume(), kPi * kPi * kPi, 1e-12);
}

TEST(MeshBuilder, MidpointClassification) {
  const Domain d({CubeShape{Point3::Zero(), Point3::Ones()}, 3, 4});
  const Node a{Point3(0, 0.2, 0.2), 1u};  // x_lo
  const Node b{Point3(0, 0.8, 0.6), 1u};
  const Node c{Point3(1, 0.5, 0.5), 2u};  // x_hi
  const Node on_face = classify_new_node(0.5 * (a.position + b.position), a, b, d, 1u);
  EXPECT_EQ(on_face.surfaces, 1u);
  const Node interior = classify_new_node(0.5 * (a.position + c.position), a, c, d, 0u);
  EXPECT_EQ(interior.surfaces, 0u);
  // Both parents on x_lo but the edge crosses the inside: no boundary face contains it.
  const Node chord = classify_new_node(0.5 * (a.position + b.position), a, b, d, 0u);
  EXPECT_EQ(chord.surfaces, 0u);
}

TEST(MeshBuilder, CurvedMidpointIsProjected) {
  const Domain d({SphereShape{Point3::Zero(), 1.0}, 5, 8});
  const Node a{Point3(1, 0, 0), 1u};
  const Node b{Point3(0, 1, 0), 1u};
  const Node m = classify_new_node(0.5 * (a.position + b.position), a, b, d, 1u);
  EXPECT_EQ(m.surfaces, 1u);
  EXPECT_NEAR(m.position.norm(), 1.0, 1e-12);
}

TEST(MeshBuilder, RefinementRespectsCriticalVolume) {
  for (const auto& spec : all_shapes()) {
    const Domain d(spec);
    Mesh m = build_initial_mesh(d);
    const auto cfg = RefineConfig::from_edge(0.3);
    const auto stats = refine_to_target(m, cfg, d);
    EXPECT_TRUE(stats.saturated) << d.shape_name();
    EXPECT_EQ(stats.element_count, m.element_count());
    EXPECT_TRUE(m.check_validity(&d).ok()) << d.shape_name();
    for (const auto& e : m.elements()) EXPECT_GE(e.volume, cfg.critical_volume * (1 - 1e-9));
    EXPECT_EQ(stats.volume_histogram.total(), m.element_count());
  }
}

TEST(MeshBuilder, CubeRefinementConservesVolume) {
  const Domain d({CubeShape{Point3::Zero(), Point3::Constant(2.0)}, 3, 4});
  Mesh m = build_initial_mesh(d);
  const auto stats = refine_to_target(m, RefineConfig::from_edge(0.25), d);
  EXPECT_NEAR(m.total_volume(), 8.0, 1e-10);
  EXPECT_NEAR(stats.projection_volume_change, 0.0, 1e-12);
}

TEST(MeshBuilder, CurvedRefinementGrowsTowardExactVolume) {
  const Domain d({SphereShape{Point3::Zero(), 1.0}, 5, 8});
  Mesh m = build_initial_mesh(d);
  const double before = m.total_volume();
  refine_to_target(m, RefineConfig::from_edge(0.2), d);
  EXPECT_GT(m.total_volume(), before);
  EXPECT_LT(m.total_volume(), d.exact_volume());
}

TEST(MeshBuilder, LongestEdgeSplitFirst) {
  const Domain d({CubeShape{Point3::Zero(), Point3(3, 1, 1)}, 3, 4});
  Mesh m = build_initial_mesh(d);
  double longest = 0.0;
  for (const auto& e : m.edges())
    longest = std::max(longest, (m.node(e.lo).position - m.node(e.hi).position).norm());
  const auto step = refine_once(m, RefineConfig::from_edge(0.3), d);
  ASSERT_FALSE(step.saturated);
  // The new node sits at the midpoint of an edge of the pre-split maximal length.
  const Point3 mid = m.node(step.new_node).position;
  bool found = false;
  for (NodeId n : m.neighbors(step.new_node))
    for (NodeId k : m.neighbors(step.new_node))
      if (n < k && (m.node(n).position + m.node(k).position - 2 * mid).norm() < 1e-12 &&
          std::abs((m.node(n).position - m.node(k).position).norm() - longest) < 1e-12)
        found = true;
  EXPECT_TRUE(found);
}

TEST(MeshBuilder, MaxDivisionsAndDeterminism) {
  const Domain d({CylinderShape{0, 0, 1, 0, 2}, 3, 8});
  auto cfg = RefineConfig::from_edge(0.25);
  cfg.max_divisions = 25;
  Mesh a = build_initial_mesh(d), b = build_initial_mesh(d);
  const auto sa = refine_to_target(a, cfg, d);
  refine_to_target(b, cfg, d);
  EXPECT_EQ(sa.divisions, 25u);
  EXPECT_FALSE(sa.saturated);
  EXPECT_EQ(a.positions(), b.positions());
  ASSERT_EQ(a.element_count(), b.element_count());
  for (ElemId e = 0; e < a.element_count(); ++e) EXPECT_EQ(a.element(e).nodes, b.element(e).nodes);
}

TEST(MeshBuilder, ObserverSeesEveryDivision) {
  const Domain d({CubeShape{Point3::Zero(), Point3::Ones()}, 3, 4});
  Mesh m = build_initial_mesh(d);
  std::size_t calls = 0;
  const auto stats = refine_to_target(m, RefineConfig::from_edge(0.3), d,
                                      [&](const Mesh& mesh, const RefineStep& s) {
                                        ++calls;
                                        EXPECT_GT(s.elements_split, 0u);
                                        EXPECT_TRUE(mesh.check_validity(&d).ok());
                                      });
  EXPECT_EQ(calls, stats.divisions);
}

TEST(Quality, HistogramClampsAndCounts) {
  const std::vector<double> v{-1.0, 0.1, 0.5, 0.99, 2.0};
  const auto h = make_histogram(v, 0.0, 1.0, 4);
  ASSERT_EQ(h.counts.size(), 4u);
  EXPECT_EQ(h.total(), 5u);
  EXPECT_EQ(h.counts[0], 2u);
  EXPECT_EQ(h.counts[2], 1u);
  EXPECT_EQ(h.counts[3], 2u);
  EXPECT_DOUBLE_EQ(h.bin_center(0), 0.125);
  EXPECT_DOUBLE_EQ(fraction_within(v, 0.0, 1.0), 0.6);
}

TEST(Quality, RatiosOfUnitBlock) {
  const Mesh m = tetrodiff::testing::kuhn_block(1, 1, 1);
  for (double r : volume_ratios(m, 1.0 / 6.0)) EXPECT_NEAR(r, 1.0, 1e-12);
  const auto e = edge_length_ratios(m, 1.0);
  EXPECT_EQ(e.size(), m.edges().size());
  EXPECT_NEAR(*std::max_element(e.begin(), e.end()), std::sqrt(3.0), 1e-12);
}
