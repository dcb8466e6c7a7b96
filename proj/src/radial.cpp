#include "khess/radial.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "khess/barriers.hpp"
#include "khess/errors.hpp"

namespace khess {

namespace {

constexpr int kMeshPoints = 2001;
constexpr int kDepthPieces = 24;

double kth_root(double p, int k) {
  if (k == 1) return p;
  return std::pow(std::max(p, 0.0), 1.0 / k);
}

double slope_power(double r, double a, double cnk, int n, int k) {
  return std::pow(r, k) / cnk + a * std::pow(r, k - n);
}

template <class F>
double integrate(F f, double lo, double hi, double tol) {
  if (hi <= lo) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 10, tol, &err);
}

// Geometric pieces resolve both the eps scale and the R scale.
template <class F>
double integrate_split(F f, double lo, double hi, double tol) {
  double total = 0.0;
  const double q = std::pow(hi / lo, 1.0 / kDepthPieces);
  double a = lo;
  for (int i = 1; i <= kDepthPieces; ++i) {
    const double b = i == kDepthPieces ? hi : lo * std::pow(q, i);
    total += integrate(f, a, b, tol);
    a = b;
  }
  return total;
}

// Mesh cells are short and the slope is smooth on them; adaptive refinement only chases roundoff there.
template <class F>
double integrate_cell(F f, double lo, double hi) {
  if (hi == lo) return 0.0;
  return boost::math::quadrature::gauss<double, 30>::integrate(f, lo, hi);
}

}  // namespace

double radial_sigma_k(double u_prime, double u_double_prime, double r, int n, int k) {
  if (!(r > 0.0)) throw DomainError("radial_sigma_k: r must be positive");
  if (k < 1 || k > n) throw DomainError("radial_sigma_k: need 1 <= k <= n");
  const double t = u_prime / r;
  return binomial(n - 1, k - 1) * u_double_prime * std::pow(t, k - 1) + binomial(n - 1, k) * std::pow(t, k);
}

double radial_depth(double eps, double R, int n, int k, double a) {
  const double cnk = binomial(n, k);
  auto f = [&](double r) { return kth_root(slope_power(r, a, cnk, n, k), k); };
  return integrate_split(f, eps, R, 1e-12);
}

double radial_hole_free(double r, double R, int n, int k) {
  return (r * r - R * R) / (2.0 * std::pow(binomial(n, k), 1.0 / k));
}

double RadialProfile::slope_power(double r) const { return khess::slope_power(r, a_, cnk_, n_, k_); }

double RadialProfile::du(double r) const { return kth_root(slope_power(r), k_); }

double RadialProfile::d2u(double r) const {
  const double p = slope_power(r);
  const double dp = k_ * std::pow(r, k_ - 1) / cnk_ + a_ * (k_ - n_) * std::pow(r, k_ - n_ - 1);
  if (k_ == 1) return dp;
  return std::pow(std::max(p, 0.0), 1.0 / k_ - 1.0) * dp / k_;
}

double RadialProfile::u(double r) const {
  if (r <= eps_) return -M_;
  if (r >= R_) return u_mesh_.back() + integrate([&](double s) { return du(s); }, R_, r, 1e-12);
  auto it = std::upper_bound(r_mesh_.begin(), r_mesh_.end(), r);
  const std::size_t i = static_cast<std::size_t>(std::distance(r_mesh_.begin(), it)) - 1;
  return u_mesh_[i] + integrate_cell([&](double s) { return du(s); }, r_mesh_[i], r);
}

RadialProfile solve_radial_ring(double eps, double R, double M, int n, int k) {
  if (!(eps > 0.0) || !(eps < R)) throw DomainError("solve_radial_ring: need 0 < eps < R");
  if (!(M > 0.0)) throw DomainError("solve_radial_ring: M must be positive");
  if (k < 1 || k > n) throw DomainError("solve_radial_ring: need 1 <= k <= n");

  const double cnk = binomial(n, k);
  const double a_min = -std::pow(eps, n) / cnk;
  auto depth = [&](double a) { return radial_depth(eps, R, n, k, a); };

  double lo, hi;
  if (k >= 2) {
    lo = a_min + 1e-14 * std::pow(eps, n);
    if (depth(lo) > M) {
      throw NoAdmissibleConstant("depth " + std::to_string(M) + " is below the smallest admissible depth " +
                                 std::to_string(depth(lo)) + " for n=" + std::to_string(n) +
                                 ", k=" + std::to_string(k));
    }
  } else {
    lo = -1.0;
    while (depth(lo) > M) lo *= 2.0;
  }
  hi = std::max(1.0, std::abs(lo));
  while (depth(hi) < M) {
    hi *= 2.0;
    if (hi > 1e300) throw NoAdmissibleConstant("depth map does not reach M");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (depth(mid) < M)
      lo = mid;
    else
      hi = mid;
  }

  RadialProfile p;
  p.eps_ = eps;
  p.R_ = R;
  p.M_ = M;
  p.n_ = n;
  p.k_ = k;
  p.cnk_ = cnk;
  p.a_ = 0.5 * (lo + hi);
  p.monotone_ = p.a_ >= a_min;
  if (!p.monotone_ && k >= 2) throw NoAdmissibleConstant("non-monotone profile is not k-admissible");

  p.r_mesh_.resize(kMeshPoints);
  p.u_mesh_.resize(kMeshPoints);
  const double q = R / eps;
  for (int i = 0; i < kMeshPoints; ++i) {
    const double t = static_cast<double>(i) / (kMeshPoints - 1);
    // Half geometric, half uniform spacing.
    p.r_mesh_[static_cast<std::size_t>(i)] = 0.5 * (eps * std::pow(q, t) + eps + (R - eps) * t);
  }
  p.r_mesh_.front() = eps;
  p.r_mesh_.back() = R;
  p.u_mesh_[0] = -M;
  for (std::size_t i = 1; i < p.r_mesh_.size(); ++i) {
    p.u_mesh_[i] = p.u_mesh_[i - 1] + integrate_cell([&](double s) { return p.du(s); }, p.r_mesh_[i - 1], p.r_mesh_[i]);
  }
  return p;
}

BoundaryScalings boundary_scalings(const RadialProfile& profile) {
  const double eps = profile.eps();
  BoundaryScalings s;
  s.slope = profile.du(eps);
  s.eps_slope = eps * s.slope;
  s.curvature = profile.d2u(eps);
  s.curvature_ratio = s.curvature / (s.slope / eps);
  const int n = profile.n(), k = profile.k();
  if (n > 2 * k) {
    s.case_quantity = s.eps_slope;
    s.regime = "n/k>2";
  } else if (n == 2 * k) {
    s.case_quantity = s.slope * eps * std::abs(std::log(eps));
    s.regime = "n/k=2";
  } else {
    s.case_quantity = s.slope * std::pow(eps, static_cast<double>(n) / k - 1.0);
    s.regime = "n/k<2";
  }
  return s;
}

}  // namespace khess
