#include "sketchprec/fwht.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sketchprec {

std::size_t next_pow2(std::size_t n) {
  if (n == 0) throw std::invalid_argument("next_pow2: n must be >= 1");
  std::size_t p = 1;
  while (p < n) {
    if (p > std::numeric_limits<std::size_t>::max() / 2) throw std::overflow_error("next_pow2: overflow");
    p <<= 1;
  }
  return p;
}

void fwht_inplace(std::span<double> x) {
  const std::size_t n = x.size();
  if (!is_pow2(n)) throw std::invalid_argument("fwht_inplace: length must be a power of two");
  double* v = x.data();
  // Radix-2 stages of width 1 and 2 fused; the remaining stages use plain butterflies.
  if (n >= 4) {
    for (std::size_t i = 0; i < n; i += 4) {
      const double a = v[i], b = v[i + 1], c = v[i + 2], d = v[i + 3];
      const double s0 = a + b, d0 = a - b, s1 = c + d, d1 = c - d;
      v[i] = s0 + s1;
      v[i + 1] = d0 + d1;
      v[i + 2] = s0 - s1;
      v[i + 3] = d0 - d1;
    }
  } else if (n == 2) {
    const double a = v[0], b = v[1];
    v[0] = a + b;
    v[1] = a - b;
    return;
  } else {
    return;
  }
  for (std::size_t h = 4; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      double* lo = v + i;
      double* hi = v + i + h;
      for (std::size_t j = 0; j < h; ++j) {
        const double a = lo[j];
        const double b = hi[j];
        lo[j] = a + b;
        hi[j] = a - b;
      }
    }
  }
}

HadamardVector::HadamardVector(std::vector<double> data) : data_(std::move(data)) {
  if (!is_pow2(data_.size())) throw std::invalid_argument("HadamardVector: length must be a power of two");
}

HadamardVector pad_pow2(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("pad_pow2: empty input");
  std::vector<double> out(next_pow2(x.size()), 0.0);
  std::copy(x.begin(), x.end(), out.begin());
  return HadamardVector(std::move(out));
}

}  // namespace sketchprec
