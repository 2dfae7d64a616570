#include "sketchprec/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sketchprec/errors.hpp"

namespace sketchprec {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

void symmetrize(std::vector<double>& buf, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = 0.5 * (buf[i * d + j] + buf[j * d + i]);
      buf[i * d + j] = v;
      buf[j * d + i] = v;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: buffer size does not match rows * cols");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_same_dim(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

double fro_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

// ------------------------------------------------------- SymmetricMatrix

SymmetricMatrix::SymmetricMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {
  if (dim == 0) throw std::invalid_argument("SymmetricMatrix: dimension must be >= 1");
}

SymmetricMatrix::SymmetricMatrix(std::size_t dim, std::span<const double> row_major)
    : dim_(dim), data_(row_major.begin(), row_major.end()) {
  if (dim == 0) throw std::invalid_argument("SymmetricMatrix: dimension must be >= 1");
  if (data_.size() != dim * dim) {
    throw std::invalid_argument("SymmetricMatrix: buffer size does not match dim * dim");
  }
  symmetrize(data_, dim_);
}

SymmetricMatrix::SymmetricMatrix(std::size_t dim, std::vector<double>&& row_major)
    : dim_(dim), data_(std::move(row_major)) {
  if (dim == 0) throw std::invalid_argument("SymmetricMatrix: dimension must be >= 1");
  if (data_.size() != dim * dim) {
    throw std::invalid_argument("SymmetricMatrix: buffer size does not match dim * dim");
  }
  symmetrize(data_, dim_);
}

SymmetricMatrix SymmetricMatrix::identity(std::size_t dim) { return scaled_identity(dim, 1.0); }

SymmetricMatrix SymmetricMatrix::scaled_identity(std::size_t dim, double value) {
  std::vector<double> buf(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) buf[i * dim + i] = value;
  return SymmetricMatrix(dim, std::move(buf));
}

SymmetricMatrix SymmetricMatrix::diagonal(std::span<const double> diag) {
  const std::size_t d = diag.size();
  std::vector<double> buf(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) buf[i * d + i] = diag[i];
  return SymmetricMatrix(d, std::move(buf));
}

SymmetricMatrix SymmetricMatrix::from_matrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymmetricMatrix: matrix is not square");
  return SymmetricMatrix(m.rows(), m.data());
}

std::vector<double> SymmetricMatrix::diagonal() const {
  std::vector<double> out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = (*this)(i, i);
  return out;
}

double SymmetricMatrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

bool SymmetricMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix SymmetricMatrix::to_matrix() const { return Matrix(dim_, dim_, data_); }

SymmetricMatrix SymmetricMatrix::padded(std::size_t new_dim) const {
  if (new_dim < dim_) throw std::invalid_argument("padded: new dimension is smaller");
  std::vector<double> buf(new_dim * new_dim, 0.0);
  for (std::size_t i = 0; i < dim_; ++i)
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(i * dim_), dim_,
                buf.begin() + static_cast<std::ptrdiff_t>(i * new_dim));
  return SymmetricMatrix(new_dim, std::move(buf));
}

SymmetricMatrix SymmetricMatrix::leading(std::size_t new_dim) const {
  if (new_dim == 0 || new_dim > dim_) throw std::invalid_argument("leading: invalid dimension");
  std::vector<double> buf(new_dim * new_dim);
  for (std::size_t i = 0; i < new_dim; ++i)
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(i * dim_), new_dim,
                buf.begin() + static_cast<std::ptrdiff_t>(i * new_dim));
  return SymmetricMatrix(new_dim, std::move(buf));
}

SymmetricMatrix SymmetricMatrix::operator+(const SymmetricMatrix& other) const {
  require_same_dim(dim_, other.dim_, "operator+");
  std::vector<double> buf(data_.size());
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = data_[k] + other.data_[k];
  return SymmetricMatrix(dim_, std::move(buf));
}

SymmetricMatrix SymmetricMatrix::operator-(const SymmetricMatrix& other) const {
  require_same_dim(dim_, other.dim_, "operator-");
  std::vector<double> buf(data_.size());
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = data_[k] - other.data_[k];
  return SymmetricMatrix(dim_, std::move(buf));
}

SymmetricMatrix SymmetricMatrix::operator*(double scale) const {
  std::vector<double> buf(data_.size());
  for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = data_[k] * scale;
  return SymmetricMatrix(dim_, std::move(buf));
}

SymmetricMatrix SymmetricMatrix::operator-() const { return (*this) * -1.0; }

// ----------------------------------------------------------- eigensolver

SymmetricMatrix EigenDecomposition::reconstruct(std::span<const double> values) const {
  const std::size_t d = eigenvectors.rows();
  if (values.size() != d) throw std::invalid_argument("reconstruct: eigenvalue count mismatch");
  std::vector<double> buf(d * d, 0.0);
  std::vector<double> scaled(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) scaled[k] = eigenvectors(i, k) * values[k];
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += scaled[k] * eigenvectors(j, k);
      buf[i * d + j] = s;
      buf[j * d + i] = s;
    }
  }
  return SymmetricMatrix(d, std::move(buf));
}

EigenDecomposition eig_sym(const SymmetricMatrix& input) {
  if (!input.all_finite()) throw NumericalError("eig_sym: non-finite matrix entry");
  const std::size_t d = input.dim();
  std::vector<double> a(input.data().begin(), input.data().end());
  Matrix v = Matrix::identity(d);

  double total = 0.0;
  for (double x : a) total += x * x;
  const double threshold = 1e-12 * std::sqrt(total);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) s += 2.0 * a[i * d + j] * a[i * d + j];
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && total > 0.0; ++sweep) {
    if (off_norm() < threshold) break;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a[p * d + q];
        if (apq == 0.0) continue;
        const double app = a[p * d + p];
        const double aqq = a[q * d + q];
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a[p * d + p] = app - t * apq;
        a[q * d + q] = aqq + t * apq;
        a[p * d + q] = 0.0;
        a[q * d + p] = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
          if (r == p || r == q) continue;
          const double g = a[r * d + p];
          const double h = a[r * d + q];
          const double np = g - s * (h + g * tau);
          const double nq = h + s * (g - h * tau);
          a[r * d + p] = np;
          a[p * d + r] = np;
          a[r * d + q] = nq;
          a[q * d + r] = nq;
        }
        for (std::size_t r = 0; r < d; ++r) {
          const double g = v(r, p);
          const double h = v(r, q);
          v(r, p) = g - s * (h + g * tau);
          v(r, q) = h + s * (g - h * tau);
        }
      }
    }
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x * d + x] < a[y * d + y]; });

  EigenDecomposition out;
  out.eigenvalues.resize(d);
  out.eigenvectors = Matrix(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    out.eigenvalues[k] = a[order[k] * d + order[k]];
    for (std::size_t r = 0; r < d; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

double min_eigenvalue(const SymmetricMatrix& a) { return eig_sym(a).eigenvalues.front(); }

double max_eigenvalue(const SymmetricMatrix& a) { return eig_sym(a).eigenvalues.back(); }

bool is_spd(const SymmetricMatrix& a, double tol) { return min_eigenvalue(a) > tol; }

SymmetricMatrix pinv(const SymmetricMatrix& a, double rank_tol) {
  const auto eig = eig_sym(a);
  double largest = 0.0;
  for (double l : eig.eigenvalues) largest = std::max(largest, std::abs(l));
  std::vector<double> inv(eig.eigenvalues.size(), 0.0);
  if (largest > 0.0) {
    for (std::size_t k = 0; k < inv.size(); ++k) {
      const double l = eig.eigenvalues[k];
      if (std::abs(l) > rank_tol * largest) inv[k] = 1.0 / l;
    }
  }
  return eig.reconstruct(inv);
}

SymmetricMatrix spd_inverse(const SymmetricMatrix& a) {
  const auto eig = eig_sym(a);
  if (eig.eigenvalues.front() <= 0.0) throw NumericalError("spd_inverse: matrix is not positive definite");
  std::vector<double> inv(eig.eigenvalues.size());
  for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / eig.eigenvalues[k];
  return eig.reconstruct(inv);
}

SymmetricMatrix psd_sqrt(const SymmetricMatrix& a) {
  const auto eig = eig_sym(a);
  std::vector<double> root(eig.eigenvalues.size());
  for (std::size_t k = 0; k < root.size(); ++k) root[k] = std::sqrt(std::max(0.0, eig.eigenvalues[k]));
  return eig.reconstruct(root);
}

// ----------------------------------------------------------------- norms

double fro_norm(const SymmetricMatrix& a) { return std::sqrt(inner(a, a)); }

double op2_norm(const SymmetricMatrix& a) {
  const auto eig = eig_sym(a);
  return std::max(std::abs(eig.eigenvalues.front()), std::abs(eig.eigenvalues.back()));
}

double inner(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "inner");
  const auto x = a.data();
  const auto y = b.data();
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

double l1_off(const SymmetricMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i + 1; j < a.dim(); ++j) s += std::abs(a(i, j));
  return s;
}

Matrix multiply(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return matmul(a.to_matrix(), b.to_matrix());
}

std::vector<double> multiply(const SymmetricMatrix& a, std::span<const double> x) {
  require_same_dim(a.dim(), x.size(), "multiply");
  std::vector<double> y(a.dim(), 0.0);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

double quadratic_form(const SymmetricMatrix& a, std::span<const double> x) {
  const auto ax = multiply(a, x);
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) s += ax[i] * x[i];
  return s;
}

bool cholesky_in_place(std::span<double> a, std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    a[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * d + k] * a[j * d + k];
      a[i * d + j] = s / ljj;
    }
  }
  return true;
}

}  // namespace sketchprec
