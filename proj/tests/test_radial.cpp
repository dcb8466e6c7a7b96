#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "khess/barriers.hpp"
#include "khess/errors.hpp"
#include "khess/radial.hpp"

using namespace khess;

TEST_CASE("radial sigma_k") {
  for (int n = 2; n <= 7; ++n)
    for (int k = 1; k <= n; ++k) CHECK(radial_sigma_k(0.8, 1.0, 0.8, n, k) == doctest::Approx(binomial(n, k)));
  // k = 1 is the radial Laplacian.
  CHECK(radial_sigma_k(0.3, 2.0, 0.5, 3, 1) == doctest::Approx(2.0 + 2 * 0.3 / 0.5));
  const UpperBarrier phi({}, 0.1, 1.0, 5, 2, 1.0);
  const double r = 0.4;
  CHECK(std::abs(radial_sigma_k(phi.radial_slope(r), phi.radial_curvature(r), r, 5, 2)) < 1e-10);
}

TEST_CASE("a = 0 reproduces the lower barrier") {
  for (auto [n, k] : {std::pair{2, 1}, {4, 2}, {3, 2}, {5, 2}}) {
    const double eps = 0.1, R = 1.0;
    const double M = (R * R - eps * eps) / (2 * std::pow(binomial(n, k), 1.0 / k));
    const RadialProfile p = solve_radial_ring(eps, R, M, n, k);
    CHECK(std::abs(p.constant()) <= 1e-9);
    const LowerBarrier lo({}, eps, M, n, k);
    for (double r = eps; r <= R; r += 0.05) CHECK(p.u(r) == doctest::Approx(lo.radial_value(r)).epsilon(1e-8));
  }
}

TEST_CASE("depth map is increasing in a") {
  for (auto [n, k] : {std::pair{2, 1}, {4, 2}, {4, 1}}) {
    double prev = -1e300;
    for (double a = 0.0; a <= 2.0; a += 0.1) {
      const double d = radial_depth(0.1, 1.0, n, k, a);
      CHECK(d > prev);
      prev = d;
    }
  }
}

TEST_CASE("profile invariants") {
  for (auto [n, k] : {std::pair{2, 1}, {4, 2}, {4, 1}, {5, 2}, {3, 2}, {6, 3}}) {
    const double eps = 0.05, R = 1.0, M = 1.0;
    const RadialProfile p = solve_radial_ring(eps, R, M, n, k);
    CHECK(p.u(eps) == doctest::Approx(-M).epsilon(1e-9));
    CHECK(std::abs(p.u(R)) <= 1e-9);
    for (int i = 0; i < 100; ++i) {
      const double r = eps + (R - eps) * (i + 0.5) / 100.0;
      CHECK(p.du(r) >= 0.0);
      CHECK(radial_sigma_k(p.du(r), p.d2u(r), r, n, k) == doctest::Approx(1.0).epsilon(1e-8));
      std::vector<double> spec(static_cast<std::size_t>(n), p.du(r) / r);
      spec[0] = p.d2u(r);
      CHECK(in_gamma_k_tol(std::span<const double>(spec), k));
    }
  }
}

TEST_CASE("radial barrier sandwich") {
  for (auto [n, k] : {std::pair{2, 1}, {4, 2}, {5, 2}, {3, 2}}) {
    const double eps = 0.1, R = 1.0, M = 1.0;
    const RadialProfile p = solve_radial_ring(eps, R, M, n, k);
    const LowerBarrier lo({}, eps, M, n, k);
    const UpperBarrier phi({}, eps, M, n, k, R);
    for (double r = eps; r <= R; r += 0.01) {
      CHECK(lo.radial_value(r) <= p.u(r) + 1e-10);
      CHECK(p.u(r) <= phi.radial_value(r) + 1e-10);
    }
  }
}

TEST_CASE("annulus closed form for k = 1, n = 2") {
  // u = r^2/4 + A log r + B with u(eps) = -M, u(R) = 0.
  const double eps = 0.1, R = 1.0, M = 1.0;
  const double A = (-M - (eps * eps - R * R) / 4) / std::log(eps / R);
  const double B = -R * R / 4 - A * std::log(R);
  const RadialProfile p = solve_radial_ring(eps, R, M, 2, 1);
  for (double r = eps; r <= R; r += 0.01) CHECK(p.u(r) == doctest::Approx(r * r / 4 + A * std::log(r) + B).epsilon(1e-9));
}

TEST_CASE("unreachable depth") {
  // k >= 2 needs a >= -eps^n / C(n,k); a shallow hole cannot be reached.
  CHECK_THROWS_AS(solve_radial_ring(0.1, 1.0, 0.01, 4, 2), NoAdmissibleConstant);
}

TEST_CASE("boundary scalings") {
  const std::vector<double> eps{0.1, 0.05, 0.025};
  std::vector<double> q41, q21, ratio;
  for (double e : eps) {
    const auto s41 = boundary_scalings(solve_radial_ring(e, 1.0, 1.0, 4, 1));
    const auto s21 = boundary_scalings(solve_radial_ring(e, 1.0, 1.0, 2, 1));
    q41.push_back(s41.eps_slope);
    q21.push_back(s21.case_quantity);
    CHECK(s21.case_quantity == doctest::Approx(s21.slope * e * std::abs(std::log(e))));
    ratio.push_back(s41.curvature_ratio);
  }
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return (*hi - *lo) / *lo;
  };
  CHECK(spread(q41) < 0.15);
  CHECK(spread(q21) < 0.15);
  for (double r : ratio) {
    CHECK(std::abs(r) < 10.0);
    CHECK(std::abs(r) > 0.1);
  }
}

TEST_CASE("profiles approach the hole-free solution as eps shrinks") {
  const double R = 1.0;
  for (auto [n, k] : {std::pair{4, 2}, {4, 1}}) {
    double prev = 1e300;
    for (double e : {0.1, 0.05, 0.025}) {
      const RadialProfile p = solve_radial_ring(e, R, -radial_hole_free(0.0, R, n, k) * 1.05, n, k);
      double worst = 0;
      for (double r = R / 4; r <= R; r += 0.01) worst = std::max(worst, std::abs(p.u(r) - radial_hole_free(r, R, n, k)));
      CHECK(worst < prev);
      prev = worst;
    }
  }
}
