#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "khess/errors.hpp"
#include "khess/symfun.hpp"

using namespace khess;

namespace {

// Subset enumeration; the test-only oracle.
double sigma_brute(const std::vector<double>& l, int k) {
  const int n = static_cast<int>(l.size());
  double s = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double p = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) p *= l[static_cast<std::size_t>(i)];
    s += p;
  }
  return s;
}

SymMatrix random_sym(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  SymMatrix s(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) s.set(i, j, U(rng));
  return s;
}

std::vector<double> random_rotation(std::mt19937_64& rng, int d) {
  // Gram-Schmidt on a random matrix.
  std::normal_distribution<double> N;
  std::vector<double> q(static_cast<std::size_t>(d * d));
  for (auto& v : q) v = N(rng);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0;
      for (int c = 0; c < d; ++c) dot += q[i * d + c] * q[j * d + c];
      for (int c = 0; c < d; ++c) q[i * d + c] -= dot * q[j * d + c];
    }
    double nrm = 0;
    for (int c = 0; c < d; ++c) nrm += q[i * d + c] * q[i * d + c];
    nrm = std::sqrt(nrm);
    for (int c = 0; c < d; ++c) q[i * d + c] /= nrm;
  }
  return q;
}

}  // namespace

TEST_CASE("sigma_k small spectra") {
  CHECK(sigma_k(SymmetricSpectrum({1, 1, 1}), 2) == doctest::Approx(3.0));
  CHECK(sigma_k(SymmetricSpectrum({3, -1, 2}), 2) == doctest::Approx(1.0));
  for (int n = 2; n <= 6; ++n)
    for (int k = 1; k <= n; ++k) {
      const double c = 1.7;
      double binom = 1;
      for (int i = 1; i <= k; ++i) binom = binom * (n - k + i) / i;
      CHECK(sigma_k(SymmetricSpectrum(std::vector<double>(n, c)), k) == doctest::Approx(binom * std::pow(c, k)));
    }
  CHECK_THROWS_AS(sigma_k(SymmetricSpectrum({1, 2}), 3), DomainError);
  CHECK_THROWS_AS(sigma_k(SymmetricSpectrum({1, 2}), 0), DomainError);
  CHECK_THROWS_AS(SymmetricSpectrum({1.0}), DomainError);
}

TEST_CASE("sigma_all") {
  auto a = sigma_all(SymmetricSpectrum({1, 1}));
  CHECK(a == std::vector<double>{2, 1});
  a = sigma_all(SymmetricSpectrum({-1, 3}));
  CHECK(a == std::vector<double>{2, -3});
  a = sigma_all(SymmetricSpectrum({0, 0, 5}));
  CHECK(a == std::vector<double>{5, 0, 0});
}

TEST_CASE("sigma_all matches subset enumeration, n <= 8") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-10, 10);
  std::uniform_int_distribution<int> Nd(2, 8);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = Nd(rng);
    std::vector<double> l(static_cast<std::size_t>(n));
    for (auto& v : l) v = U(rng);
    const auto all = sigma_all(SymmetricSpectrum(l));
    for (int k = 1; k <= n; ++k) {
      const double ref = sigma_brute(l, k);
      // Relative to the size of the terms so that cancellation does not blow the ratio up.
      double scale = 0;
      std::vector<double> a(l.size());
      std::transform(l.begin(), l.end(), a.begin(), [](double v) { return std::abs(v); });
      scale = sigma_brute(a, k);
      worst = std::max(worst, std::abs(all[static_cast<std::size_t>(k - 1)] - ref) / scale);
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("Garding cone membership") {
  CHECK(in_gamma_k(SymmetricSpectrum({1, 1, 1}), 3));
  CHECK_FALSE(in_gamma_k(SymmetricSpectrum({-1, 3}), 2));
  CHECK(in_gamma_k(SymmetricSpectrum({-1, 3}), 1));
  CHECK(in_gamma_k(SymmetricSpectrum({0, 1}), 1));
  CHECK_FALSE(in_gamma_k(SymmetricSpectrum({0, 1}), 2));
  CHECK(in_gamma_k_tol(SymmetricSpectrum({0, 1}), 2, 1e-10));
  CHECK_FALSE(in_gamma_k_tol(SymmetricSpectrum({-1e-3, 1}), 2, 1e-10));
}

TEST_CASE("Garding cone nesting on random spectra") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2, 10);
  int members = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + t % 7;
    std::vector<double> l(static_cast<std::size_t>(n));
    for (auto& v : l) v = U(rng);
    const SymmetricSpectrum s(l);
    for (int k = 1; k <= n; ++k) {
      if (!in_gamma_k(s, k)) continue;
      ++members;
      for (int j = 1; j < k; ++j) CHECK(in_gamma_k(s, j));
    }
  }
  CHECK(members > 1000);
}

TEST_CASE("sigma_k gradient") {
  const SymMatrix s = SymMatrix::diagonal(std::vector<double>{2.0, 5.0});
  const SymMatrix g1 = sigma_k_gradient(s, 1);
  CHECK(g1(0, 0) == 1.0);
  CHECK(g1(1, 1) == 1.0);
  CHECK(g1(0, 1) == 0.0);
  const SymMatrix g2 = sigma_k_gradient(s, 2);
  CHECK(g2(0, 0) == doctest::Approx(5.0));
  CHECK(g2(1, 1) == doctest::Approx(2.0));
}

TEST_CASE("sigma_k gradient matches finite differences") {
  std::mt19937_64 rng(17);
  double worst = 0;
  int tested = 0;
  while (tested < 100) {
    const int d = 3;
    SymMatrix s = random_sym(rng, d);
    for (int i = 0; i < d; ++i) s.add(i, i, 2.0);  // mostly admissible
    const int k = 1 + tested % 3;
    if (!in_gamma_k(eigen_sym(s), k)) continue;
    ++tested;
    const SymMatrix g = sigma_k_gradient(s, k);
    const double hstep = 1e-6;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        SymMatrix p = s, m = s;
        p.add(i, j, hstep);
        m.add(i, j, -hstep);
        const double fd = (sigma_k(eigen_sym(p), k) - sigma_k(eigen_sym(m), k)) / (2 * hstep);
        const double an = i == j ? g(i, j) : 2.0 * g(i, j);  // symmetric perturbation hits both entries
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
      }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("gradient is positive on admissible diagonal matrices") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(-1, 4);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> l(4);
    for (auto& v : l) v = U(rng);
    const int k = 1 + t % 4;
    if (!in_gamma_k(SymmetricSpectrum(l), k)) continue;
    const SymMatrix g = sigma_k_gradient(SymMatrix::diagonal(l), k);
    for (int i = 0; i < 4; ++i) CHECK(g(i, i) > 0.0);
  }
}

TEST_CASE("eigen_sym") {
  auto e = eigen_sym(SymMatrix::identity(2));
  CHECK(e[0] == 1.0);
  CHECK(e[1] == 1.0);
  SymMatrix r(2);
  r.set(0, 1, 1.0);
  e = eigen_sym(r);
  CHECK(e[0] == doctest::Approx(-1.0));
  CHECK(e[1] == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const SymMatrix s = random_sym(rng, 3, 5.0);
    const auto dec = eigen_decompose(s);
    // Q diag(L) Q^T with Q columns the eigenvectors.
    double err = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = 0;
        for (int c = 0; c < 3; ++c) v += dec.vectors[i * 3 + c] * dec.values[c] * dec.vectors[j * 3 + c];
        err = std::max(err, std::abs(v - s(i, j)));
      }
    CHECK(err <= 1e-12 * std::max(1.0, s.frobenius_norm()));
  }
}

TEST_CASE("rotation invariance") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 100; ++t) {
    const int d = 2 + t % 2;
    const SymMatrix s = random_sym(rng, d, 3.0);
    const auto q = random_rotation(rng, d);
    const SymMatrix rs = s.conjugated(q);
    for (int k = 1; k <= d; ++k) {
      const double a = sigma_k(eigen_sym(s), k), b = sigma_k(eigen_sym(rs), k);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::pow(s.frobenius_norm(), k)));
    }
  }
}
