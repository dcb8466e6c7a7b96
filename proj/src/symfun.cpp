#include "khess/symfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "khess/errors.hpp"

namespace khess {

SymmetricSpectrum::SymmetricSpectrum(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw DomainError("SymmetricSpectrum needs at least two eigenvalues");
  }
  std::sort(values_.begin(), values_.end());
}

double SymmetricSpectrum::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SymMatrix SymMatrix::identity(int d) {
  SymMatrix m(d);
  for (int i = 0; i < d; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(static_cast<int>(diag.size()));
  for (int i = 0; i < m.dim(); ++i) m.set(i, i, diag[static_cast<std::size_t>(i)]);
  return m;
}

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

SymMatrix SymMatrix::operator*(double s) const {
  SymMatrix r = *this;
  for (double& v : r.a_) v *= s;
  return r;
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  SymMatrix r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
  return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  SymMatrix r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
  return r;
}

std::vector<double> SymMatrix::multiply(int d, std::span<const double> a, std::span<const double> b) {
  std::vector<double> c(static_cast<std::size_t>(d * d), 0.0);
  for (int i = 0; i < d; ++i)
    for (int l = 0; l < d; ++l) {
      const double ail = a[static_cast<std::size_t>(i * d + l)];
      for (int j = 0; j < d; ++j)
        c[static_cast<std::size_t>(i * d + j)] += ail * b[static_cast<std::size_t>(l * d + j)];
    }
  return c;
}

SymMatrix SymMatrix::conjugated(std::span<const double> q) const {
  const int d = d_;
  std::vector<double> qt(static_cast<std::size_t>(d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) qt[static_cast<std::size_t>(j * d + i)] = q[static_cast<std::size_t>(i * d + j)];
  const auto tmp = multiply(d, q, a_);
  const auto full = multiply(d, tmp, qt);
  SymMatrix r(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      r.set(i, j, 0.5 * (full[static_cast<std::size_t>(i * d + j)] + full[static_cast<std::size_t>(j * d + i)]));
  return r;
}

std::vector<double> sigma_prefix(std::span<const double> lambda, int max_order) {
  const int n = static_cast<int>(lambda.size());
  const int m = std::min(max_order, n);
  // e[0] = 1 and e[j] accumulates sigma_j of the eigenvalues processed so far.
  std::vector<double> e(static_cast<std::size_t>(m + 1), 0.0);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    const double li = lambda[static_cast<std::size_t>(i)];
    for (int j = std::min(i + 1, m); j >= 1; --j) e[static_cast<std::size_t>(j)] += li * e[static_cast<std::size_t>(j - 1)];
  }
  return {e.begin() + 1, e.end()};
}

double sigma_k(std::span<const double> lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  if (k < 1 || k > n) {
    throw DomainError("sigma_k: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  return sigma_prefix(lambda, k)[static_cast<std::size_t>(k - 1)];
}

double sigma_k(const SymmetricSpectrum& lambda, int k) { return sigma_k(lambda.values(), k); }

std::vector<double> sigma_all(const SymmetricSpectrum& lambda) {
  return sigma_prefix(lambda.values(), lambda.size());
}

bool in_gamma_k(const SymmetricSpectrum& lambda, int k) {
  if (k < 1 || k > lambda.size()) throw DomainError("in_gamma_k: k out of range");
  const auto s = sigma_prefix(lambda.values(), k);
  return std::all_of(s.begin(), s.end(), [](double v) { return v > 0.0; });
}

bool in_gamma_k_tol(std::span<const double> lambda, int k, double tau) {
  if (k < 1 || k > static_cast<int>(lambda.size())) throw DomainError("in_gamma_k_tol: k out of range");
  double scale = 0.0;
  for (double v : lambda) scale = std::max(scale, std::abs(v));
  const auto s = sigma_prefix(lambda, k);
  double bound = 1.0;
  for (int j = 0; j < k; ++j) {
    bound *= 1.0 + scale;
    if (!(s[static_cast<std::size_t>(j)] > -tau * bound)) return false;
  }
  return true;
}

bool in_gamma_k_tol(const SymmetricSpectrum& lambda, int k, double tau) {
  return in_gamma_k_tol(lambda.values(), k, tau);
}

SymMatrix sigma_k_gradient(const SymMatrix& s, int k) {
  const int d = s.dim();
  if (k < 1 || k > d) throw DomainError("sigma_k_gradient: k out of range");
  // d sigma_k / dS = sum_{m=0}^{k-1} (-1)^m sigma_{k-1-m}(S) S^m
  const auto lam = eigenvalues(s);
  const auto sig = sigma_prefix(lam, k - 1);
  auto sigma_of = [&](int j) { return j == 0 ? 1.0 : sig[static_cast<std::size_t>(j - 1)]; };

  std::vector<double> power(static_cast<std::size_t>(d * d), 0.0);
  for (int i = 0; i < d; ++i) power[static_cast<std::size_t>(i * d + i)] = 1.0;
  std::vector<double> acc(static_cast<std::size_t>(d * d), 0.0);
  double sign = 1.0;
  for (int m = 0; m < k; ++m) {
    const double c = sign * sigma_of(k - 1 - m);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * power[i];
    power = SymMatrix::multiply(d, power, s.data());
    sign = -sign;
  }
  SymMatrix g(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      g.set(i, j, 0.5 * (acc[static_cast<std::size_t>(i * d + j)] + acc[static_cast<std::size_t>(j * d + i)]));
  return g;
}

namespace {

EigenDecomposition jacobi(const SymMatrix& s) {
  const int d = s.dim();
  std::vector<double> a(s.data().begin(), s.data().end());
  std::vector<double> v(static_cast<std::size_t>(d * d), 0.0);
  for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i * d + i)] = 1.0;
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i * d + j)]; };
  auto vt = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i * d + j)]; };

  const double norm = s.frobenius_norm();
  const double target = 1e-15 * norm;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += 2.0 * at(p, q) * at(p, q);
    if (std::sqrt(off) <= target || norm == 0.0) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int r = 0; r < d; ++r) {
          const double arp = at(r, p);
          const double arq = at(r, q);
          at(r, p) = c * arp - sn * arq;
          at(r, q) = sn * arp + c * arq;
        }
        for (int r = 0; r < d; ++r) {
          const double apr = at(p, r);
          const double aqr = at(q, r);
          at(p, r) = c * apr - sn * aqr;
          at(q, r) = sn * apr + c * aqr;
        }
        for (int r = 0; r < d; ++r) {
          const double vrp = vt(r, p);
          const double vrq = vt(r, q);
          vt(r, p) = c * vrp - sn * vrq;
          vt(r, q) = sn * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return at(x, x) < at(y, y); });
  EigenDecomposition out;
  out.values.resize(static_cast<std::size_t>(d));
  out.vectors.resize(static_cast<std::size_t>(d * d));
  for (int j = 0; j < d; ++j) {
    const int src = order[static_cast<std::size_t>(j)];
    out.values[static_cast<std::size_t>(j)] = at(src, src);
    for (int r = 0; r < d; ++r) out.vectors[static_cast<std::size_t>(r * d + j)] = vt(r, src);
  }
  return out;
}

EigenDecomposition closed_form_2x2(const SymMatrix& s) {
  const double a = s(0, 0), b = s(0, 1), c = s(1, 1);
  const double mean = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  EigenDecomposition out;
  out.values = {mean - rad, mean + rad};
  // Eigenvector of the larger eigenvalue from the better-conditioned row.
  double vx, vy;
  if (rad == 0.0) {
    vx = 1.0;
    vy = 0.0;
  } else if (a >= c) {
    vx = a - c + 2.0 * rad;  // 2 (lambda_max - c), paired with 2b
    vy = 2.0 * b;
    const double nrm = std::hypot(vx, vy);
    vx /= nrm;
    vy /= nrm;
  } else {
    vx = 2.0 * b;
    vy = c - a + 2.0 * rad;
    const double nrm = std::hypot(vx, vy);
    vx /= nrm;
    vy /= nrm;
  }
  // columns: [small, large]
  out.vectors = {-vy, vx, vx, vy};
  return out;
}

}  // namespace

EigenDecomposition eigen_decompose(const SymMatrix& s) {
  if (s.dim() == 2) return closed_form_2x2(s);
  if (s.dim() == 1) return {{s(0, 0)}, {1.0}};
  return jacobi(s);
}

std::vector<double> eigenvalues(const SymMatrix& s) {
  if (s.dim() == 2) {
    const double a = s(0, 0), b = s(0, 1), c = s(1, 1);
    const double mean = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    return {mean - rad, mean + rad};
  }
  return eigen_decompose(s).values;
}

SymmetricSpectrum eigen_sym(const SymMatrix& s) { return SymmetricSpectrum(eigenvalues(s)); }

}  // namespace khess
