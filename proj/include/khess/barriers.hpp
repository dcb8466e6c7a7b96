#pragma once

#include <vector>

#include "khess/geometry.hpp"
#include "khess/symfun.hpp"

namespace khess {

/// Binomial coefficient C(n, k) as a double; zero outside 0 <= k <= n.
double binomial(int n, int k);

/// Rotationally symmetric solution (|x-c|^2 - eps^2) / (2 C(n,k)^{1/k}) - M of sigma_k = 1.
class LowerBarrier {
 public:
  LowerBarrier(Point center, double eps, double M, int n, int k);

  double value(const Point& x) const;
  double radial_value(double r) const;
  double radial_slope(double r) const { return r * curvature_; }
  /// Constant Hessian C(n,k)^{-1/k} I in dimension `dim`.
  SymMatrix hessian(int dim) const;
  double curvature() const { return curvature_; }

 private:
  Point center_;
  double eps_, M_;
  int n_, k_;
  double curvature_;
};

/// Origin-centered lower barrier value.
double lower_barrier(const Point& x, double eps, double M, int n, int k);

enum class BarrierCase { power_super, log_super, power_super_small };
const char* to_string(BarrierCase c);
/// Case selector by the sign of n/k - 2.
BarrierCase select_case(int n, int k);

/// The sigma_k-harmonic radial supersolution phi with phi = -M on |x - c| = eps and phi >= 0
/// on the outer boundary, using the smallest admissible constant.
class UpperBarrier {
 public:
  UpperBarrier(Point center, double eps, double M, int n, int k, const ConvexDomain& outer);
  /// Radial variant with an explicit smallest boundary radius.
  UpperBarrier(Point center, double eps, double M, int n, int k, double min_boundary_radius);

  BarrierCase kind() const { return kind_; }
  double constant() const { return C_; }
  double value(const Point& x) const;
  double radial_value(double r) const;
  double radial_slope(double r) const;
  double radial_curvature(double r) const;
  /// Hessian in dimension `dim` at x != center.
  SymMatrix hessian(const Point& x, int dim) const;
  /// Spectrum (g'', g'/r repeated n-1 times) of the n-dimensional radial Hessian.
  std::vector<double> radial_spectrum(double r) const;

 private:
  void init(double rmin);
  Point center_;
  double eps_, M_;
  int n_, k_;
  BarrierCase kind_;
  double beta_ = 0.0;  // 2 - n/k
  double C_ = 0.0;
};

double upper_barrier_phi(const Point& x, double eps, double M, int n, int k, const ConvexDomain& outer);

/// max(-psi_min, max_{b on boundary} |b - center|^2 / (2 C(n,k)^{1/k})) * (1 + margin).
double choose_M1(double psi_min, const ConvexDomain& outer, int n, int k, double margin = 0.05);
double choose_M1(double psi_min, const ConvexDomain& outer, int n, int k, const Point& barrier_center,
                 double margin = 0.05);

}  // namespace khess
