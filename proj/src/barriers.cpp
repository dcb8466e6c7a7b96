#include "khess/barriers.hpp"

#include <cmath>

#include "khess/errors.hpp"

namespace khess {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

LowerBarrier::LowerBarrier(Point center, double eps, double M, int n, int k)
    : center_(center), eps_(eps), M_(M), n_(n), k_(k) {
  if (k < 1 || k > n) throw DomainError("lower barrier: need 1 <= k <= n");
  if (!(eps > 0.0) || !(M > 0.0)) throw DomainError("lower barrier: eps and M must be positive");
  curvature_ = std::pow(binomial(n, k), -1.0 / k);
}

double LowerBarrier::radial_value(double r) const { return 0.5 * curvature_ * (r * r - eps_ * eps_) - M_; }

double LowerBarrier::value(const Point& x) const { return radial_value(distance(x, center_)); }

SymMatrix LowerBarrier::hessian(int dim) const { return SymMatrix::identity(dim) * curvature_; }

double lower_barrier(const Point& x, double eps, double M, int n, int k) {
  return LowerBarrier(Point{}, eps, M, n, k).value(x);
}

const char* to_string(BarrierCase c) {
  switch (c) {
    case BarrierCase::power_super:
      return "power_super";
    case BarrierCase::log_super:
      return "log_super";
    case BarrierCase::power_super_small:
      return "power_super_small";
  }
  return "?";
}

BarrierCase select_case(int n, int k) {
  if (k < 1 || k > n) throw DomainError("barrier case: need 1 <= k <= n");
  if (n > 2 * k) return BarrierCase::power_super;
  if (n == 2 * k) return BarrierCase::log_super;
  return BarrierCase::power_super_small;
}

UpperBarrier::UpperBarrier(Point center, double eps, double M, int n, int k, const ConvexDomain& outer)
    : center_(center), eps_(eps), M_(M), n_(n), k_(k), kind_(select_case(n, k)) {
  init(outer.min_boundary_distance(center));
}

UpperBarrier::UpperBarrier(Point center, double eps, double M, int n, int k, double min_boundary_radius)
    : center_(center), eps_(eps), M_(M), n_(n), k_(k), kind_(select_case(n, k)) {
  init(min_boundary_radius);
}

void UpperBarrier::init(double rmin) {
  if (!(eps_ > 0.0) || !(M_ > 0.0)) throw DomainError("upper barrier: eps and M must be positive");
  if (!(rmin > eps_)) throw DomainError("upper barrier: outer boundary must lie beyond the hole");
  beta_ = 2.0 - static_cast<double>(n_) / k_;
  // phi increases with r, so phi >= 0 on the boundary is decided at the nearest boundary point.
  switch (kind_) {
    case BarrierCase::power_super:
      C_ = M_ / (std::pow(eps_, beta_) - std::pow(rmin, beta_));
      break;
    case BarrierCase::log_super:
      C_ = M_ / std::log(rmin / eps_);
      break;
    case BarrierCase::power_super_small:
      C_ = M_ / (std::pow(rmin, beta_) - std::pow(eps_, beta_));
      break;
  }
}

double UpperBarrier::radial_value(double r) const {
  if (!(r > 0.0)) throw DomainError("upper barrier is singular at its center");
  switch (kind_) {
    case BarrierCase::power_super:
      return -C_ * std::pow(r, beta_) + C_ * std::pow(eps_, beta_) - M_;
    case BarrierCase::log_super:
      return C_ * std::log(r) - C_ * std::log(eps_) - M_;
    case BarrierCase::power_super_small:
      return C_ * std::pow(r, beta_) - C_ * std::pow(eps_, beta_) - M_;
  }
  return 0.0;
}

double UpperBarrier::radial_slope(double r) const {
  switch (kind_) {
    case BarrierCase::power_super:
      return -C_ * beta_ * std::pow(r, beta_ - 1.0);
    case BarrierCase::log_super:
      return C_ / r;
    case BarrierCase::power_super_small:
      return C_ * beta_ * std::pow(r, beta_ - 1.0);
  }
  return 0.0;
}

double UpperBarrier::radial_curvature(double r) const {
  switch (kind_) {
    case BarrierCase::power_super:
      return -C_ * beta_ * (beta_ - 1.0) * std::pow(r, beta_ - 2.0);
    case BarrierCase::log_super:
      return -C_ / (r * r);
    case BarrierCase::power_super_small:
      return C_ * beta_ * (beta_ - 1.0) * std::pow(r, beta_ - 2.0);
  }
  return 0.0;
}

double UpperBarrier::value(const Point& x) const { return radial_value(distance(x, center_)); }

std::vector<double> UpperBarrier::radial_spectrum(double r) const {
  std::vector<double> s(static_cast<std::size_t>(n_), radial_slope(r) / r);
  s[0] = radial_curvature(r);
  return s;
}

SymMatrix UpperBarrier::hessian(const Point& x, int dim) const {
  const double r = distance(x, center_);
  if (!(r > 0.0)) throw DomainError("upper barrier is singular at its center");
  const double t = radial_slope(r) / r;
  const double c = radial_curvature(r);
  // D^2 g(|x|) = g'/r I + (g'' - g'/r) e e^T
  SymMatrix H(dim);
  for (int i = 0; i < dim; ++i) {
    const double ei = (x[static_cast<std::size_t>(i)] - center_[static_cast<std::size_t>(i)]) / r;
    for (int j = i; j < dim; ++j) {
      const double ej = (x[static_cast<std::size_t>(j)] - center_[static_cast<std::size_t>(j)]) / r;
      H.set(i, j, (i == j ? t : 0.0) + (c - t) * ei * ej);
    }
  }
  return H;
}

double upper_barrier_phi(const Point& x, double eps, double M, int n, int k, const ConvexDomain& outer) {
  return UpperBarrier(Point{}, eps, M, n, k, outer).value(x);
}

double choose_M1(double psi_min, const ConvexDomain& outer, int n, int k, const Point& barrier_center,
                 double margin) {
  if (!(psi_min < 0.0)) throw DomainError("choose_M1: the hole-free solution must be negative inside");
  const double rmax = outer.max_boundary_distance(barrier_center);
  const double sub = rmax * rmax / (2.0 * std::pow(binomial(n, k), 1.0 / k));
  return std::max(-psi_min, sub) * (1.0 + margin);
}

double choose_M1(double psi_min, const ConvexDomain& outer, int n, int k, double margin) {
  return choose_M1(psi_min, outer, n, k, outer.center(), margin);
}

}  // namespace khess
