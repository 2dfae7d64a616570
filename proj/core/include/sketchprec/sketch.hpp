#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sketchprec/symmat.hpp"

namespace sketchprec {

enum class OperatorKind : std::uint8_t { Dense = 0, Structured = 1 };
enum class Distribution : std::uint8_t { Gaussian = 0, UniformSphere = 1 };

const char* to_string(OperatorKind kind) noexcept;
const char* to_string(Distribution dist) noexcept;

/// Identity of the operator a sketch was produced with.
struct OperatorFingerprint {
  OperatorKind kind = OperatorKind::Structured;
  Distribution dist = Distribution::Gaussian;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t d_pad = 0;

  bool operator==(const OperatorFingerprint&) const = default;
};

/// Rank-one sketching operator a_1..a_m on R^d.
///
/// Features:  Phi(x)_j  = (a_j^T x)^2 / m
/// Forward:   A(M)_j    = a_j^T M a_j / m
/// Adjoint:   A*(y)     = (1/m) sum_j y_j a_j a_j^T
///
/// Structured operators stack B = m / d_pad blocks
/// d_pad^{-3/2} H D1 H D2 H D3 (H Walsh-Hadamard, D random sign diagonals),
/// so only 3 * B * d_pad signs are stored and every column has unit norm.
/// Inputs are zero-padded from d_orig to d_pad = next power of two, and the
/// requested m is rounded up to a multiple of d_pad.
///
/// Dense operators keep m explicit vectors in dimension d_pad = d_orig, drawn
/// from N(0, I/d) or uniformly on the unit sphere.
///
/// Operators are immutable; concurrent calls are safe.
class SketchOperator {
 public:
  static SketchOperator build(OperatorKind kind, std::size_t d, std::size_t m, std::uint64_t seed,
                              Distribution dist = Distribution::Gaussian);

  /// Dense operator with caller-supplied vectors (all of length d).
  static SketchOperator from_vectors(std::size_t d, const std::vector<std::vector<double>>& vectors);

  OperatorKind kind() const noexcept { return kind_; }
  Distribution dist() const noexcept { return dist_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t d_orig() const noexcept { return d_orig_; }
  std::size_t d_pad() const noexcept { return d_pad_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t requested_m() const noexcept { return requested_m_; }
  std::size_t blocks() const noexcept { return kind_ == OperatorKind::Structured ? m_ / d_pad_ : 0; }
  OperatorFingerprint fingerprint() const noexcept { return {kind_, dist_, seed_, m_, d_pad_}; }

  /// Phi(x), x of length d_orig.
  std::vector<double> features(std::span<const double> x) const;
  /// A(M), M of dimension d_orig.
  std::vector<double> apply(const SymmetricMatrix& M) const;
  /// A*(y) restricted to the leading d_orig block.
  SymmetricMatrix adjoint(std::span<const double> y) const;

  /// a_j in R^{d_pad}.
  std::vector<double> column(std::size_t j) const;
  /// d_pad x m matrix with columns a_j.
  Matrix materialize() const;

  /// Number of stored sign entries (structured) or vector entries (dense).
  std::size_t stored_entries() const noexcept;

  double max_column_norm_sq() const noexcept { return max_column_norm_sq_; }
  /// sigma_max(A)^2, the largest eigenvalue of A A^T (power iteration, cached).
  double sigma_max_sq() const noexcept { return sigma_max_sq_; }

 private:
  SketchOperator() = default;

  void block_transpose_apply(std::size_t block, std::span<double> v) const;  // v <- B_l^T v
  void block_apply(std::size_t block, std::span<double> v) const;            // v <- B_l v
  std::vector<double> gram_apply(std::span<const double> v) const;           // A A^T v
  void finalize();

  OperatorKind kind_ = OperatorKind::Structured;
  Distribution dist_ = Distribution::Gaussian;
  std::uint64_t seed_ = 0;
  std::size_t d_orig_ = 0;
  std::size_t d_pad_ = 0;
  std::size_t m_ = 0;
  std::size_t requested_m_ = 0;
  std::vector<std::int8_t> signs_;  // [block][3][d_pad]
  std::vector<double> dense_;       // [m][d_pad], row j = a_j
  double max_column_norm_sq_ = 0.0;
  double sigma_max_sq_ = 0.0;
};

/// Mean of Phi over a data stream.
struct Sketch {
  std::vector<double> values;
  std::size_t d_orig = 0;
  std::size_t d_pad = 0;
  std::size_t m = 0;
  std::uint64_t n = 0;  // samples absorbed; 0 marks an empty sketch
  OperatorFingerprint fingerprint;

  bool empty() const noexcept { return n == 0; }
};

/// One-pass running-mean accumulator of s = (1/n) sum_i Phi(x_i).
class SketchAccumulator {
 public:
  explicit SketchAccumulator(const SketchOperator& op);

  void add(std::span<const double> x);
  std::uint64_t count() const noexcept { return n_; }
  Sketch result() const;

 private:
  const SketchOperator* op_;
  std::vector<double> mean_;
  std::uint64_t n_ = 0;
};

/// Sketches every row of `data` (n x d_orig) in a single pass.
Sketch sketch_stream(const SketchOperator& op, const Matrix& data);

/// Sketch of a covariance matrix given directly, s = A(Sigma). Recorded with n = 1.
Sketch sketch_covariance(const SketchOperator& op, const SymmetricMatrix& sigma);

/// Sample-weighted mean of two sketches of the same operator.
Sketch merge(const Sketch& a, const Sketch& b);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of ||M||_Lambda = E_a |a^T M a| with a ~ N(0, I/d)
/// or uniform on the unit sphere of R^d.
MonteCarloEstimate lambda_norm_estimate(const SymmetricMatrix& M, Distribution dist,
                                        std::size_t n_samples, std::uint64_t seed);

inline double lambda_norm_mc(const SymmetricMatrix& M, Distribution dist, std::size_t n_samples,
                             std::uint64_t seed) {
  return lambda_norm_estimate(M, dist, n_samples, seed).mean;
}

}  // namespace sketchprec
