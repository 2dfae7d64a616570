#pragma once

// Independent reference computations for the unit and acceptance tests.
// Nothing here calls into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "sketchprec/rng.hpp"
#include "sketchprec/symmat.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

inline Dense to_dense(const sketchprec::SymmetricMatrix& a) {
  Dense out = zeros(a.dim(), a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out[i][j] = a(i, j);
  return out;
}

inline sketchprec::SymmetricMatrix from_dense(const Dense& a) {
  std::vector<double> flat;
  for (const auto& row : a) flat.insert(flat.end(), row.begin(), row.end());
  return sketchprec::SymmetricMatrix(a.size(), std::span<const double>(flat));
}

inline Dense matmul(const Dense& a, const Dense& b) {
  Dense c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline double fro_diff(const Dense& a, const Dense& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  return std::sqrt(s);
}

inline double fro(const Dense& a) {
  double s = 0.0;
  for (const auto& row : a)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

inline Dense identity(std::size_t d) {
  Dense out = zeros(d, d);
  for (std::size_t i = 0; i < d; ++i) out[i][i] = 1.0;
  return out;
}

/// Symmetric matrix with N(0, 1) entries.
inline sketchprec::SymmetricMatrix random_symmetric(std::size_t d, sketchprec::SplitMix64& rng) {
  std::vector<double> a(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) a[i * d + j] = a[j * d + i] = rng.gaussian();
  return sketchprec::SymmetricMatrix(d, std::span<const double>(a));
}

/// G G^T / d + shift I, well conditioned for moderate shift.
inline sketchprec::SymmetricMatrix random_spd(std::size_t d, sketchprec::SplitMix64& rng, double shift = 0.5) {
  Dense g = zeros(d, d);
  for (auto& row : g)
    for (double& v : row) v = rng.gaussian();
  Dense a = zeros(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += g[i][k] * g[j][k];
      a[i][j] = s / static_cast<double>(d) + (i == j ? shift : 0.0);
    }
  return from_dense(a);
}

/// Dense Sylvester Hadamard matrix by the block recursion H_{2n} = [[H, H], [H, -H]].
inline Dense sylvester(std::size_t d) {
  Dense h{{1.0}};
  while (h.size() < d) {
    const std::size_t n = h.size();
    Dense next = zeros(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        next[i][j] = h[i][j];
        next[i][j + n] = h[i][j];
        next[i + n][j] = h[i][j];
        next[i + n][j + n] = -h[i][j];
      }
    h = std::move(next);
  }
  return h;
}

/// Characteristic polynomial coefficients c_0..c_d of det(xI - A), c_d = 1,
/// by the Faddeev-LeVerrier recursion.
inline std::vector<double> char_poly(const Dense& a) {
  const std::size_t d = a.size();
  std::vector<double> c(d + 1, 0.0);
  c[d] = 1.0;
  Dense m = zeros(d, d);  // M_0 = 0
  for (std::size_t k = 1; k <= d; ++k) {
    // M_k = A M_{k-1} + c_{d-k+1} I
    Dense am = matmul(a, m);
    for (std::size_t i = 0; i < d; ++i) am[i][i] += c[d - k + 1];
    m = std::move(am);
    const Dense amk = matmul(a, m);
    double tr = 0.0;
    for (std::size_t i = 0; i < d; ++i) tr += amk[i][i];
    c[d - k] = -tr / static_cast<double>(k);
  }
  return c;
}

/// Roots of a monic polynomial by Durand-Kerner iteration, real parts sorted.
inline std::vector<double> poly_real_roots(const std::vector<double>& c) {
  using cd = std::complex<double>;
  const std::size_t d = c.size() - 1;
  double bound = 0.0;
  for (std::size_t i = 0; i < d; ++i) bound = std::max(bound, std::abs(c[i]));
  bound += 1.0;
  std::vector<cd> z(d);
  const cd seed(0.4, 0.9);
  for (std::size_t i = 0; i < d; ++i) z[i] = bound * std::pow(seed, static_cast<double>(i));
  auto eval = [&](cd x) {
    cd v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
  };
  for (int it = 0; it < 5000; ++it) {
    double move = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      cd den = 1.0;
      for (std::size_t j = 0; j < d; ++j)
        if (j != i) den *= (z[i] - z[j]);
      const cd step = eval(z[i]) / den;
      z[i] -= step;
      move = std::max(move, std::abs(step));
    }
    if (move < 1e-15 * bound) break;
  }
  std::vector<double> out;
  for (const auto& r : z) out.push_back(r.real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
