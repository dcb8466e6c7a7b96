#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "khess/barriers.hpp"
#include "khess/errors.hpp"
#include "khess/grid_solver.hpp"
#include "khess/radial.hpp"

using namespace khess;

namespace {

const ConvexDomain kDisk = ConvexDomain::ball(2, {}, 1.0);

double quad(const Point& x) { return 0.7 * x[0] * x[0] - 0.3 * x[0] * x[1] + 1.1 * x[1] * x[1] + 0.2 * x[0] - 0.5; }

BoundaryData data_from(std::function<double(const Point&)> f) { return BoundaryData{f, f}; }

std::vector<double> sample_unknowns(const Discretization& d, const std::function<double(const Point&)>& f) {
  std::vector<double> v(d.unknowns());
  for (std::size_t u = 0; u < v.size(); ++u) v[u] = f(d.grid().position(d.node_of(u)));
  return v;
}

double min_boundary_gap(const Grid& g, const RingDomain& ring, std::size_t node) {
  const Point p = g.position(node);
  const double to_hole = distance(p, ring.hole_center()) - ring.eps();
  const double to_outer = 1.0 - norm(p);  // unit disk centered at the origin
  return std::min(to_hole, to_outer);
}

}  // namespace

TEST_CASE("discrete Hessian is exact on quadratics, including cut arms") {
  const double h = 0.04;
  const RingDomain ring(kDisk, {}, 0.1);
  const Grid g = classify_nodes(make_grid(kDisk, h), ring);
  const Discretization d(g, BoundaryGeometry::from(ring), data_from(quad));
  const auto x = sample_unknowns(d, quad);
  int near = 0, half_arm = 0;
  for (std::size_t u = 0; u < d.unknowns(); ++u) {
    const SymMatrix H = d.hessian(x, u);
    CHECK(H(0, 0) == doctest::Approx(1.4).epsilon(1e-9));
    CHECK(H(1, 1) == doctest::Approx(2.2).epsilon(1e-9));
    if (g.node_class[d.node_of(u)] == NodeClass::near_inner) ++near;
    for (int a = 0; a < 2; ++a)
      for (int s : {-1, 1})
        if (d.arm(u, a, s).unknown < 0 && std::abs(d.arm(u, a, s).theta - 0.5) < 1e-12) ++half_arm;
    const Point grad = d.gradient(x, u);
    const Point p = g.position(d.node_of(u));
    CHECK(grad[0] == doctest::Approx(1.4 * p[0] - 0.3 * p[1] + 0.2).epsilon(1e-9));
    CHECK(grad[1] == doctest::Approx(-0.3 * p[0] + 2.2 * p[1]).epsilon(1e-9));
    if (d.mixed_fallback(u)) continue;
    CHECK(H(0, 1) == doctest::Approx(-0.3).epsilon(1e-9));
  }
  CHECK(near > 0);
  CHECK(half_arm > 0);
}

TEST_CASE("discrete Hessian of |x|^4 at (1,0) converges at second order") {
  const auto big = ConvexDomain::ball(2, {}, 2.0);
  auto f = [](const Point& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return r2 * r2;
  };
  std::vector<double> err;
  for (double h : {0.1, 0.05, 0.025}) {
    const Grid g = classify_nodes(make_grid(big, h), big);
    const Discretization d(g, BoundaryGeometry::from(big), data_from(f));
    const auto x = sample_unknowns(d, f);
    std::size_t best = 0;
    double bd = 1e9;
    for (std::size_t u = 0; u < d.unknowns(); ++u) {
      const double dd = distance(g.position(d.node_of(u)), {1, 0, 0});
      if (dd < bd) bd = dd, best = u;
    }
    REQUIRE(bd < 1e-9);
    const SymMatrix H = d.hessian(x, best);
    err.push_back(std::max({std::abs(H(0, 0) - 12), std::abs(H(1, 1) - 4), std::abs(H(0, 1))}));
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("residual of the lower barrier vanishes and phi gives -1") {
  const double eps = 0.2, M = 1.0;
  const RingDomain ring(kDisk, {}, eps);
  const Grid g = classify_nodes(make_grid(kDisk, 1.0 / 32), ring);
  for (int k : {1, 2}) {
    const LowerBarrier lo({}, eps, M, 2, k);
    const Discretization d(g, BoundaryGeometry::from(ring), data_from([&](const Point& p) { return lo.value(p); }));
    const Residual r = residual(d, sample_unknowns(d, [&](const Point& p) { return lo.value(p); }), k);
    CHECK(r.inadmissible == 0);
    for (std::size_t u = 0; u < d.unknowns(); ++u)
      if (!d.mixed_fallback(u)) CHECK(std::abs(r.values[u]) <= 1e-10);
  }
  // n = d = 2, k = 1: phi is harmonic, so sigma_1 = 0 up to truncation error.
  const UpperBarrier phi({}, eps, M, 2, 1, kDisk);
  const Discretization d(g, BoundaryGeometry::from(ring), data_from([&](const Point& p) { return phi.value(p); }));
  const Residual r = residual(d, sample_unknowns(d, [&](const Point& p) { return phi.value(p); }), 1);
  for (std::size_t u = 0; u < d.unknowns(); ++u)
    if (norm(g.position(d.node_of(u))) >= 0.5 && min_boundary_gap(g, ring, d.node_of(u)) > 4.0 / 32) CHECK(r.values[u] == doctest::Approx(-1.0).epsilon(0.02));
}

TEST_CASE("k = 1 residual is the discrete Laplacian minus one") {
  const RingDomain ring(kDisk, {0.2, 0, 0}, 0.15);
  const Grid g = classify_nodes(make_grid(kDisk, 1.0 / 24), ring);
  const Discretization d(g, BoundaryGeometry::from(ring), BoundaryData::constant(0.5));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 0);
  std::vector<double> x(d.unknowns());
  for (auto& v : x) v = U(rng);
  const Residual r = residual(d, x, 1);
  for (std::size_t u = 0; u < d.unknowns(); ++u) {
    const SymMatrix H = d.hessian(x, u);
    CHECK(r.values[u] == doctest::Approx(H(0, 0) + H(1, 1) - 1.0).epsilon(1e-12));
  }
}

TEST_CASE("Jacobian matches directional finite differences") {
  for (int k : {1, 2}) {
    const RingDomain ring(kDisk, {0.1, -0.1, 0}, 0.2);
    const Grid g = classify_nodes(make_grid(kDisk, 1.0 / 16), ring);
    const double M = 1.0;
    const LowerBarrier lo(ring.hole_center(), ring.eps(), M, 2, k);
    auto field = [&](const Point& p) { return lo.value(p) + 0.3 * p[0] * p[0]; };
    const Discretization d(g, BoundaryGeometry::from(ring), data_from(field));
    const auto x = sample_unknowns(d, field);
    const SparseRows J = residual_jacobian(d, x, k);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> v(x.size());
      for (auto& e : v) e = U(rng);
      const double t = 1e-7;
      std::vector<double> xp = x, xm = x;
      for (std::size_t i = 0; i < x.size(); ++i) xp[i] += t * v[i], xm[i] -= t * v[i];
      const Residual rp = residual(d, xp, k), rm = residual(d, xm, k);
      REQUIRE(rp.inadmissible == 0);
      REQUIRE(rm.inadmissible == 0);
      double num = 0, den = 0;
      for (std::size_t row = 0; row < x.size(); ++row) {
        double jv = 0;
        for (std::size_t e = J.row_offsets[row]; e < J.row_offsets[row + 1]; ++e) jv += J.vals[e] * v[J.cols[e]];
        const double fd = (rp.values[row] - rm.values[row]) / (2 * t);
        num = std::max(num, std::abs(fd - jv));
        den = std::max(den, std::abs(jv));
      }
      CHECK(num / den <= 1e-5);
    }
  }
}

TEST_CASE("hole-free solves on the disk") {
  const Grid g = make_grid(kDisk, 1.0 / 32);
  for (int k : {1, 2}) {
    SolveReport rep;
    const GridField psi = solve_hole_free(kDisk, g, k, {}, &rep);
    CHECK(rep.converged);
    const auto& d = *psi.disc;
    double err = 0;
    for (std::size_t u = 0; u < d.unknowns(); ++u) {
      const std::size_t node = d.node_of(u);
      const double r = norm(psi.grid().position(node));
      CHECK(psi.values[node] < 0.0);
      err = std::max(err, std::abs(psi.values[node] - radial_hole_free(r, 1.0, 2, k)));
    }
    CHECK(err <= 2e-3);
  }
}

TEST_CASE("k = 1 centered annulus matches the radial oracle at second order") {
  const double eps = 0.1, M = 1.0;
  const RingDomain ring(kDisk, {}, eps);
  const RadialProfile p = solve_radial_ring(eps, 1.0, M, 2, 1);
  std::vector<double> err;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const Grid g = make_grid(kDisk, h);
    auto [f, rep] = solve_ring(ring, g, M, 1);
    CHECK(rep.converged);
    double e = 0;
    for (std::size_t node : f.disc->unknown_nodes()) e = std::max(e, std::abs(f.values[node] - p.u(norm(g.position(node)))));
    err.push_back(e);
  }
  CHECK(err[2] <= 1e-3);
  CHECK(err[1] / err[2] >= 3.2);
  CHECK(err[1] / err[2] <= 4.8);
}

TEST_CASE("Monge-Ampere ring solution is convex and ordered") {
  const double h = 1.0 / 32, eps = 0.15;
  const Grid g = make_grid(kDisk, h);
  const GridField psi = solve_hole_free(kDisk, g, 2);
  const double M = choose_M1(-0.5, kDisk, 2, 2);
  const RingDomain ring(kDisk, {}, eps);
  SolveOptions opt;
  opt.psi = &psi;
  auto [f, rep] = solve_ring(ring, g, M, 2, opt);
  CHECK(rep.converged);
  const auto& d = *f.disc;
  const LowerBarrier lo({}, eps, M, 2, 2);
  double min_eig = 1e9;
  for (std::size_t u = 0; u < d.unknowns(); ++u) {
    const std::size_t node = d.node_of(u);
    const auto ev = eigenvalues(d.hessian(f.unknown_values(), u));
    min_eig = std::min(min_eig, ev[0]);
    const Point p = g.position(node);
    const double slack = min_boundary_gap(g, ring, node) > 2 * h ? 1e-9 : 4 * h;
    CHECK(lo.value(p) <= f.values[node] + slack);
    CHECK(f.values[node] <= psi.values[node] + slack);
  }
  CHECK(min_eig >= -10 * h);
}

TEST_CASE("gradient maximum lies next to the boundary") {
  const double h = 1.0 / 32;
  const Grid g = make_grid(kDisk, h);
  const RingDomain ring(kDisk, {0.25, 0.1, 0}, 0.12);
  auto [f, rep] = solve_ring(ring, g, 0.2625, 1);
  double best = -1;
  std::size_t arg = 0;
  for (std::size_t node : f.disc->unknown_nodes()) {
    const Point gr = discrete_gradient(f, node);
    const double m = std::hypot(gr[0], gr[1]);
    if (m > best) best = m, arg = node;
  }
  CHECK(min_boundary_gap(g, ring, arg) <= h * std::sqrt(2.0) + 1e-12);
}

TEST_CASE("solutions decrease with a larger hole") {
  const double h = 1.0 / 32, M = 0.5;
  const Grid g = make_grid(kDisk, h);
  auto [small, r1] = solve_ring(RingDomain(kDisk, {0.1, 0, 0}, 0.1), g, M, 1);
  auto [large, r2] = solve_ring(RingDomain(kDisk, {0.1, 0, 0}, 0.2), g, M, 1);
  for (std::size_t node : large.disc->unknown_nodes()) {
    if (!std::isfinite(small.values[node])) continue;
    CHECK(small.values[node] >= large.values[node] - h);
  }
}

TEST_CASE("independent of the initialization") {
  const double h = 1.0 / 24;
  const Grid g = make_grid(kDisk, h);
  const RingDomain ring(kDisk, {}, 0.15);
  const double M = 0.6;
  auto [a, ra] = solve_ring(ring, g, M, 2);
  SolveOptions opt;
  std::vector<double> init = a.unknown_values();
  const auto& d = *a.disc;
  for (std::size_t u = 0; u < init.size(); ++u) {
    const Point p = g.position(d.node_of(u));
    init[u] += 0.01 * (1.0 - norm(p)) * (norm(p) - 0.15);  // keeps the boundary behaviour
  }
  opt.initial = init;
  auto [b, rb] = solve_ring(ring, g, M, 2, opt);
  CHECK(rb.initialization == "explicit");
  double diff = 0;
  for (std::size_t node : d.unknown_nodes()) diff = std::max(diff, std::abs(a.values[node] - b.values[node]));
  CHECK(diff <= 1e-8);
}

TEST_CASE("solves are deterministic") {
  const Grid g = make_grid(kDisk, 1.0 / 24);
  const RingDomain ring(kDisk, {0.2, 0.1, 0}, 0.15);
  auto [a, ra] = solve_ring(ring, g, 0.3, 1);
  auto [b, rb] = solve_ring(ring, g, 0.3, 1);
  CHECK(field_csv(a) == field_csv(b));
}

TEST_CASE("errors") {
  const Grid g = make_grid(kDisk, 1.0 / 16);
  CHECK_THROWS_AS(solve_ring(RingDomain(kDisk, {}, 0.1), g, 1.0, 1), HoleTooSmallForGrid);
  CHECK_THROWS_AS(solve_ring(RingDomain(kDisk, {}, 0.2), g, 1.0, 3), DomainError);
  CHECK_THROWS_AS(solve_ring(RingDomain(kDisk, {}, 0.2), g, -1.0, 1), DomainError);
  SolveOptions opt;
  opt.max_iterations = 1;
  opt.tolerance = 1e-300;
  CHECK_THROWS_AS(solve_ring(RingDomain(kDisk, {}, 0.2), g, 1.0, 2, opt), Diverged);
}

TEST_CASE("argmin tie-breaking and CSV layout") {
  const Grid g = make_grid(kDisk, 1.0 / 16);
  const GridField psi = solve_hole_free(kDisk, g, 1);
  const std::size_t a = argmin_node(psi);
  const double m = psi.values[a];
  for (std::size_t node : psi.disc->unknown_nodes()) {
    CHECK(psi.values[node] >= m - 1e-12);
    if (node < a) CHECK(psi.values[node] > m + 1e-12);
  }
  const std::string csv = field_csv(psi);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "i,j,x,y,value,node_class");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == g.size());
}
