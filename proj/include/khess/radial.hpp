#pragma once

#include <vector>

namespace khess {

/// sigma_k of the radial Hessian spectrum (u'', u'/r repeated n-1 times).
double radial_sigma_k(double u_prime, double u_double_prime, double r, int n, int k);

/// Radially symmetric solution of sigma_k(D^2 u) = 1 on eps < |x| < R with u(eps) = -M, u(R) = 0.
/// Closed-form slope u'(r) = (r^k / C(n,k) + a r^{k-n})^{1/k}; `a` found by bisection on the depth.
class RadialProfile {
 public:
  double eps() const { return eps_; }
  double outer_radius() const { return R_; }
  double depth() const { return M_; }
  int n() const { return n_; }
  int k() const { return k_; }
  double constant() const { return a_; }
  /// True when u' >= 0 on [eps, R]; only k = 1 profiles may be non-monotone.
  bool monotone() const { return monotone_; }
  double quadrature_tolerance() const { return tol_; }

  const std::vector<double>& radii() const { return r_mesh_; }
  const std::vector<double>& values() const { return u_mesh_; }

  double u(double r) const;
  double du(double r) const;
  double d2u(double r) const;

  friend RadialProfile solve_radial_ring(double eps, double R, double M, int n, int k);

 private:
  double slope_power(double r) const;  // r^k / C + a r^{k-n}
  double eps_ = 0, R_ = 0, M_ = 0;
  int n_ = 2, k_ = 1;
  double a_ = 0;
  double cnk_ = 1;
  bool monotone_ = true;
  double tol_ = 1e-10;
  std::vector<double> r_mesh_, u_mesh_;
};

/// Depth integral of u' over [eps, R] for a given constant a.
double radial_depth(double eps, double R, int n, int k, double a);

RadialProfile solve_radial_ring(double eps, double R, double M, int n, int k);

/// Hole-free radial solution (r^2 - R^2) / (2 C(n,k)^{1/k}).
double radial_hole_free(double r, double R, int n, int k);

struct BoundaryScalings {
  double slope = 0;            // u'(eps)
  double eps_slope = 0;        // eps u'(eps)
  double curvature = 0;        // u''(eps)
  double curvature_ratio = 0;  // u''(eps) / (u'(eps) / eps)
  /// eps u' (n/k > 2), u' eps |log eps| (n/k = 2), u' eps^{n/k - 1} (n/k < 2).
  double case_quantity = 0;
  const char* regime = "";
};

BoundaryScalings boundary_scalings(const RadialProfile& profile);

}  // namespace khess
