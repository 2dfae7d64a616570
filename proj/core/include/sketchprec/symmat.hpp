#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sketchprec {

/// Dense row-major real matrix. Used for data matrices, eigenvector bases and
/// products of symmetric matrices, none of which are symmetric in general.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

/// Dense symmetric d x d matrix with d >= 1.
///
/// Every constructor symmetrizes its input as (A + A^T) / 2, so
/// `(*this)(i, j) == (*this)(j, i)` holds bit-exactly. Instances are
/// immutable; arithmetic returns new values.
class SymmetricMatrix {
 public:
  /// Zero matrix.
  explicit SymmetricMatrix(std::size_t dim);
  /// Row-major d*d input, symmetrized.
  SymmetricMatrix(std::size_t dim, std::span<const double> row_major);
  SymmetricMatrix(std::size_t dim, std::vector<double>&& row_major);

  static SymmetricMatrix identity(std::size_t dim);
  static SymmetricMatrix scaled_identity(std::size_t dim, double value);
  static SymmetricMatrix diagonal(std::span<const double> diag);
  /// Square matrix, symmetrized.
  static SymmetricMatrix from_matrix(const Matrix& m);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> diagonal() const;
  double trace() const noexcept;
  bool all_finite() const noexcept;
  Matrix to_matrix() const;

  /// Zero-pads to a larger dimension (original block top-left).
  SymmetricMatrix padded(std::size_t new_dim) const;
  /// Leading principal sub-matrix.
  SymmetricMatrix leading(std::size_t new_dim) const;

  SymmetricMatrix operator+(const SymmetricMatrix& other) const;
  SymmetricMatrix operator-(const SymmetricMatrix& other) const;
  SymmetricMatrix operator*(double scale) const;
  SymmetricMatrix operator-() const;
  bool operator==(const SymmetricMatrix& other) const = default;

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

inline SymmetricMatrix operator*(double scale, const SymmetricMatrix& m) { return m * scale; }

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]

  /// V diag(f(lambda)) V^T for a spectral function already applied to the eigenvalues.
  SymmetricMatrix reconstruct(std::span<const double> values) const;
  SymmetricMatrix reconstruct() const { return reconstruct(eigenvalues); }
};

/// Cyclic Jacobi eigensolver. Sweeps until off(A) < 1e-12 * ||A||_Fro
/// (at most 100 sweeps). Throws NumericalError on non-finite input.
EigenDecomposition eig_sym(const SymmetricMatrix& a);

double min_eigenvalue(const SymmetricMatrix& a);
double max_eigenvalue(const SymmetricMatrix& a);
bool is_spd(const SymmetricMatrix& a, double tol = 0.0);

inline constexpr double kDefaultRankTol = 1e-12;

/// Moore-Penrose pseudo-inverse: eigenvalues with |lambda| > rank_tol * max|lambda|
/// are inverted, the rest are zeroed.
SymmetricMatrix pinv(const SymmetricMatrix& a, double rank_tol = kDefaultRankTol);

/// Inverse of an SPD matrix through its eigendecomposition.
SymmetricMatrix spd_inverse(const SymmetricMatrix& a);
/// Principal square root of a positive semidefinite matrix (negative
/// eigenvalues from rounding are clamped to zero).
SymmetricMatrix psd_sqrt(const SymmetricMatrix& a);

double fro_norm(const SymmetricMatrix& a);
double op2_norm(const SymmetricMatrix& a);
double inner(const SymmetricMatrix& a, const SymmetricMatrix& b);
/// Sum over i < j of |A_ij|.
double l1_off(const SymmetricMatrix& a);
double fro_norm(const Matrix& a);

Matrix multiply(const SymmetricMatrix& a, const SymmetricMatrix& b);
std::vector<double> multiply(const SymmetricMatrix& a, std::span<const double> x);
/// x^T A x
double quadratic_form(const SymmetricMatrix& a, std::span<const double> x);

/// Attempts an in-place Cholesky factorization of a row-major d*d buffer
/// (lower triangle used). Returns false if a pivot is not strictly positive.
bool cholesky_in_place(std::span<double> a, std::size_t dim);

}  // namespace sketchprec
