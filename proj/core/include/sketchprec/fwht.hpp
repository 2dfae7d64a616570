#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sketchprec {

constexpr bool is_pow2(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

/// Replaces x by H x, H the unnormalized Sylvester-ordered Walsh-Hadamard
/// matrix (H_2 = [[1, 1], [1, -1]]). Throws std::invalid_argument if the length
/// is not a power of two.
void fwht_inplace(std::span<double> x);

/// Buffer whose length is a power of two.
class HadamardVector {
 public:
  explicit HadamardVector(std::vector<double> data);

  std::size_t size() const noexcept { return data_.size(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  const std::vector<double>& values() const noexcept { return data_; }

  HadamardVector& transform() {
    fwht_inplace(data_);
    return *this;
  }

 private:
  std::vector<double> data_;
};

/// Zero-pads to the next power of two. The caller keeps the original length.
HadamardVector pad_pow2(std::span<const double> x);

}  // namespace sketchprec
