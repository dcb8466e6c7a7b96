#pragma once

#include <span>
#include <vector>

namespace khess {

/// Eigenvalues of a Hessian in canonical (ascending) order.
class SymmetricSpectrum {
 public:
  /// Sorts `values`; throws DomainError when fewer than two entries.
  explicit SymmetricSpectrum(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  double max_abs() const;

 private:
  std::vector<double> values_;
};

/// Dense symmetric d x d matrix. Writes through set() keep both triangles equal.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int d) : d_(d), a_(static_cast<std::size_t>(d * d), 0.0) {}
  static SymMatrix identity(int d);
  static SymMatrix diagonal(std::span<const double> diag);

  int dim() const { return d_; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * d_ + j)]; }
  void set(int i, int j, double v) {
    a_[static_cast<std::size_t>(i * d_ + j)] = v;
    a_[static_cast<std::size_t>(j * d_ + i)] = v;
  }
  void add(int i, int j, double v) {
    a_[static_cast<std::size_t>(i * d_ + j)] += v;
    if (i != j) a_[static_cast<std::size_t>(j * d_ + i)] += v;
  }

  double frobenius_norm() const;
  SymMatrix operator*(double s) const;
  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;

  /// Plain (not necessarily symmetric) product, used for R S R^T with orthogonal R.
  static std::vector<double> multiply(int d, std::span<const double> a, std::span<const double> b);
  /// Q S Q^T for an orthogonal row-major Q; result symmetrized exactly.
  SymMatrix conjugated(std::span<const double> q) const;

  std::span<const double> data() const { return a_; }

 private:
  int d_ = 0;
  std::vector<double> a_;
};

struct EigenDecomposition {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // row-major d x d, column j is the eigenvector of values[j]
};

/// Elementary symmetric sums (sigma_1, ..., sigma_m) of `lambda`, m = min(max_order, n).
/// Uses the characteristic-polynomial recurrence e_j <- e_j + lambda_i e_{j-1}.
std::vector<double> sigma_prefix(std::span<const double> lambda, int max_order);

double sigma_k(const SymmetricSpectrum& lambda, int k);
double sigma_k(std::span<const double> lambda, int k);
std::vector<double> sigma_all(const SymmetricSpectrum& lambda);

bool in_gamma_k(const SymmetricSpectrum& lambda, int k);
/// Relaxed cone test sigma_j > -tau (1 + |lambda|_inf)^j for j = 1..k.
bool in_gamma_k_tol(const SymmetricSpectrum& lambda, int k, double tau = 1e-10);
bool in_gamma_k_tol(std::span<const double> lambda, int k, double tau = 1e-10);

/// Matrix of partial derivatives d sigma_k / d S_ij.
SymMatrix sigma_k_gradient(const SymMatrix& s, int k);

EigenDecomposition eigen_decompose(const SymMatrix& s);
SymmetricSpectrum eigen_sym(const SymMatrix& s);
/// Ascending eigenvalues without eigenvectors; closed form for d = 2.
std::vector<double> eigenvalues(const SymMatrix& s);

}  // namespace khess
