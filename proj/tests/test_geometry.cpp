#include <doctest.h>

#include <cmath>
#include <numbers>

#include "khess/errors.hpp"
#include "khess/geometry.hpp"

using namespace khess;

namespace {
std::size_t count(const Grid& g, NodeClass c) {
  std::size_t n = 0;
  for (auto v : g.node_class) n += v == c;
  return n;
}
}  // namespace

TEST_CASE("domain construction rejects bad parameters") {
  CHECK_THROWS_AS(ConvexDomain::ball(2, {}, 0.0), InvalidGeometry);
  CHECK_THROWS_AS(ConvexDomain::ball(4, {}, 1.0), InvalidGeometry);
  CHECK_THROWS_AS(ConvexDomain::ellipsoid(2, {}, {1.0, -1.0, 1.0}), InvalidGeometry);
  CHECK_THROWS_AS(ConvexDomain::p_ball(2, {}, 1.0, 1.5), InvalidGeometry);
  CHECK_THROWS_AS(ConvexDomain::p_ball(2, {}, 1.0, 9.0), InvalidGeometry);
}

TEST_CASE("gauge and boundary points") {
  const auto disk = ConvexDomain::ball(2, {0.1, -0.2, 0}, 0.8);
  CHECK(disk.gauge({0.1, -0.2, 0}) == 0.0);
  CHECK(disk.gauge({0.9, -0.2, 0}) == doctest::Approx(1.0));
  CHECK(disk.contains({0.5, -0.2, 0}));
  CHECK_FALSE(disk.contains({1.0, -0.2, 0}));

  const auto pb = ConvexDomain::p_ball(2, {}, 1.0, 4.0);
  for (int i = 0; i < 16; ++i) {
    const double a = 2 * std::numbers::pi * i / 16 + 0.1;
    const Point b = pb.boundary_along({std::cos(a), std::sin(a), 0});
    CHECK(std::abs(pb.gauge(b) - 1.0) <= 1e-12);
  }
  const auto ell = ConvexDomain::ellipsoid(3, {}, {1.0, 0.5, 0.25});
  const Point b = ell.boundary_along({0, 1, 0});
  CHECK(b[1] == doctest::Approx(0.5));
  CHECK(ell.max_boundary_distance({}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ell.min_boundary_distance({}) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("farthest boundary point of a disk from an interior point") {
  const auto disk = ConvexDomain::ball(2, {}, 1.0);
  const Point f = disk.farthest_boundary_point({-0.3, 0.0, 0});
  CHECK(f[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(f[1]) < 1e-6);
  // From the center every point ties; the rule picks +x.
  const Point c = disk.farthest_boundary_point({});
  CHECK(c[0] == doctest::Approx(1.0));
}

TEST_CASE("ring domain invariants") {
  const auto disk = ConvexDomain::ball(2, {}, 1.0);
  CHECK_NOTHROW(RingDomain(disk, {0.5, 0, 0}, 0.2));
  CHECK_THROWS_AS(RingDomain(disk, {0.8, 0, 0}, 0.2), InvalidGeometry);  // tangent
  CHECK_THROWS_AS(RingDomain(disk, {0, 0, 0}, 0.0), InvalidGeometry);
  CHECK_THROWS_AS(RingDomain(disk, {2, 0, 0}, 0.1), InvalidGeometry);
}

TEST_CASE("hole node count matches the hole area") {
  const auto disk = ConvexDomain::ball(2, {}, 1.0);
  const double h = 0.02, eps = 0.1;
  const Grid g = classify_nodes(make_grid(disk, h), RingDomain(disk, {}, eps));
  const double expect = std::numbers::pi * eps * eps / (h * h);
  CHECK(std::abs(static_cast<double>(count(g, NodeClass::hole)) - expect) <= 0.05 * expect);
}

TEST_CASE("hole below two grid spacings is rejected") {
  const auto disk = ConvexDomain::ball(2, {}, 1.0);
  CHECK_THROWS_AS(classify_nodes(make_grid(disk, 0.02), RingDomain(disk, {}, 0.03)), HoleTooSmallForGrid);
}

TEST_CASE("classification partitions the grid and interior stencils stay inside") {
  const auto disk = ConvexDomain::ball(2, {}, 1.0);
  const RingDomain ring(disk, {0.3, 0.1, 0}, 0.15);
  const Grid g = classify_nodes(make_grid(disk, 1.0 / 32), ring);
  std::size_t total = 0;
  for (auto c : {NodeClass::interior, NodeClass::near_outer, NodeClass::near_inner, NodeClass::hole,
                 NodeClass::exterior})
    total += count(g, c);
  CHECK(total == g.size());
  // First and last rows are exterior.
  for (int j = 0; j < g.counts[1]; ++j) {
    CHECK(g.node_class[g.index(0, j)] == NodeClass::exterior);
    CHECK(g.node_class[g.index(g.counts[0] - 1, j)] == NodeClass::exterior);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.node_class[i] != NodeClass::interior) continue;
    for (int a = 0; a < 2; ++a)
      for (int s : {-1, 1}) {
        const auto nb = g.neighbor(i, a, s);
        REQUIRE(nb);
        CHECK(g.is_unknown(*nb));
      }
  }
}

TEST_CASE("discrete ring area converges at first order") {
  const auto disk = ConvexDomain::ball(2, {}, 1.0);
  const RingDomain ring(disk, {}, 0.2);
  const double area = std::numbers::pi * (1.0 - 0.04);
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const Grid g = classify_nodes(make_grid(disk, h), ring);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < g.size(); ++i) inside += g.is_unknown(i);
    CHECK(std::abs(static_cast<double>(inside) * h * h - area) <= 8.0 * h);
  }
}

TEST_CASE("classification is deterministic") {
  const auto ell = ConvexDomain::ellipsoid(2, {}, {1.0, 0.7, 1});
  const RingDomain ring(ell, {0.2, 0.1, 0}, 0.1);
  const Grid a = classify_nodes(make_grid(ell, 1.0 / 40), ring);
  const Grid b = classify_nodes(make_grid(ell, 1.0 / 40), ring);
  CHECK(a.node_class == b.node_class);
}

TEST_CASE("boundary intersection") {
  const double h = 0.05;
  const auto disk = ConvexDomain::ball(2, {}, 1.0);
  const RingDomain ring(disk, {}, 0.2);
  CutArm c = boundary_intersection({0.2 + 0.4 * h, 0, 0}, {-1, 0, 0}, h, ring);
  CHECK(c.theta == doctest::Approx(0.4));
  CHECK(c.boundary == BoundaryKind::inner);
  CHECK(c.point[0] == doctest::Approx(0.2));

  c = boundary_intersection({1 - 0.25 * h, 0, 0}, {1, 0, 0}, h, ring);
  CHECK(c.theta == doctest::Approx(0.25));
  CHECK(c.boundary == BoundaryKind::outer);

  CHECK_THROWS_AS(boundary_intersection({0.5, 0, 0}, {1, 0, 0}, h, ring), NotACutArm);
}
