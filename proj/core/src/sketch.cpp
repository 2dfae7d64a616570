#include "sketchprec/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sketchprec/errors.hpp"
#include "sketchprec/fwht.hpp"
#include "sketchprec/rng.hpp"

namespace sketchprec {

const char* to_string(OperatorKind kind) noexcept {
  return kind == OperatorKind::Dense ? "dense" : "structured";
}

const char* to_string(Distribution dist) noexcept {
  return dist == Distribution::Gaussian ? "gaussian" : "sphere";
}

namespace {

void draw_vector(SplitMix64& rng, Distribution dist, std::span<double> out) {
  const double d = static_cast<double>(out.size());
  if (dist == Distribution::Gaussian) {
    const double scale = 1.0 / std::sqrt(d);
    for (double& v : out) v = rng.gaussian() * scale;
    return;
  }
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (double& v : out) {
      v = rng.gaussian();
      norm_sq += v * v;
    }
  } while (norm_sq == 0.0);
  const double inv = 1.0 / std::sqrt(norm_sq);
  for (double& v : out) v *= inv;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

// ------------------------------------------------------------ construction

SketchOperator SketchOperator::build(OperatorKind kind, std::size_t d, std::size_t m,
                                     std::uint64_t seed, Distribution dist) {
  if (d == 0) throw std::invalid_argument("build_operator: d must be >= 1");
  if (m == 0) throw std::invalid_argument("build_operator: m must be >= 1");

  SketchOperator op;
  op.kind_ = kind;
  op.dist_ = dist;
  op.seed_ = seed;
  op.d_orig_ = d;
  op.requested_m_ = m;
  SplitMix64 rng(seed);

  if (kind == OperatorKind::Structured) {
    op.d_pad_ = next_pow2(d);
    const std::size_t blocks = m / op.d_pad_ + (m % op.d_pad_ != 0 ? 1 : 0);
    if (blocks > std::numeric_limits<std::size_t>::max() / (3 * op.d_pad_)) {
      throw std::overflow_error("build_operator: d_pad * blocks overflows");
    }
    op.m_ = blocks * op.d_pad_;
    op.signs_.resize(3 * op.m_);
    for (auto& s : op.signs_) s = static_cast<std::int8_t>(rng.rademacher());
  } else {
    op.d_pad_ = d;
    op.m_ = m;
    if (m > std::numeric_limits<std::size_t>::max() / d) {
      throw std::overflow_error("build_operator: m * d overflows");
    }
    op.dense_.resize(m * d);
    for (std::size_t j = 0; j < m; ++j) {
      draw_vector(rng, dist, std::span<double>(op.dense_).subspan(j * d, d));
    }
  }
  op.finalize();
  return op;
}

SketchOperator SketchOperator::from_vectors(std::size_t d,
                                            const std::vector<std::vector<double>>& vectors) {
  if (d == 0) throw std::invalid_argument("from_vectors: d must be >= 1");
  if (vectors.empty()) throw std::invalid_argument("from_vectors: need at least one vector");
  SketchOperator op;
  op.kind_ = OperatorKind::Dense;
  op.dist_ = Distribution::Gaussian;
  op.d_orig_ = d;
  op.d_pad_ = d;
  op.m_ = vectors.size();
  op.requested_m_ = op.m_;
  op.dense_.reserve(op.m_ * d);
  for (const auto& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("from_vectors: vector length mismatch");
    op.dense_.insert(op.dense_.end(), v.begin(), v.end());
  }
  op.finalize();
  return op;
}

void SketchOperator::finalize() {
  if (kind_ == OperatorKind::Structured) {
    // d^{-3/2} H D H D H D has unit-norm columns exactly.
    max_column_norm_sq_ = 1.0;
  } else {
    max_column_norm_sq_ = 0.0;
    for (std::size_t j = 0; j < m_; ++j) {
      const std::span<const double> a(dense_.data() + j * d_pad_, d_pad_);
      max_column_norm_sq_ = std::max(max_column_norm_sq_, dot(a, a));
    }
  }

  // Power iteration on A A^T.
  std::vector<double> v(d_pad_);
  SplitMix64 rng(0x5eed5eedULL);
  for (double& x : v) x = 1.0 + 0.1 * rng.uniform();
  double norm = std::sqrt(dot(v, v));
  for (double& x : v) x /= norm;
  double estimate = 0.0;
  constexpr int kMaxIterations = 20000;
  for (int it = 0; it < kMaxIterations; ++it) {
    auto w = gram_apply(v);
    const double rayleigh = dot(v, w);
    norm = std::sqrt(dot(w, w));
    if (norm == 0.0) {
      estimate = 0.0;
      break;
    }
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / norm;
    const bool done = it > 0 && std::abs(rayleigh - estimate) <= 1e-13 * std::abs(rayleigh);
    estimate = rayleigh;
    if (done) break;
  }
  sigma_max_sq_ = estimate;
}

// ------------------------------------------------------- block transforms

void SketchOperator::block_transpose_apply(std::size_t block, std::span<double> v) const {
  // B^T = c D3 H D2 H D1 H
  const std::size_t d = d_pad_;
  const std::int8_t* s = signs_.data() + block * 3 * d;
  const double c = 1.0 / (static_cast<double>(d) * std::sqrt(static_cast<double>(d)));
  fwht_inplace(v);
  for (std::size_t i = 0; i < d; ++i) v[i] *= s[i];
  fwht_inplace(v);
  for (std::size_t i = 0; i < d; ++i) v[i] *= s[d + i];
  fwht_inplace(v);
  for (std::size_t i = 0; i < d; ++i) v[i] *= c * s[2 * d + i];
}

void SketchOperator::block_apply(std::size_t block, std::span<double> v) const {
  // B = c H D1 H D2 H D3
  const std::size_t d = d_pad_;
  const std::int8_t* s = signs_.data() + block * 3 * d;
  const double c = 1.0 / (static_cast<double>(d) * std::sqrt(static_cast<double>(d)));
  for (std::size_t i = 0; i < d; ++i) v[i] *= s[2 * d + i];
  fwht_inplace(v);
  for (std::size_t i = 0; i < d; ++i) v[i] *= s[d + i];
  fwht_inplace(v);
  for (std::size_t i = 0; i < d; ++i) v[i] *= c * s[i];
  fwht_inplace(v);
}

std::vector<double> SketchOperator::gram_apply(std::span<const double> v) const {
  const std::size_t d = d_pad_;
  std::vector<double> out(d, 0.0);
  if (kind_ == OperatorKind::Structured) {
    std::vector<double> buf(d);
    for (std::size_t b = 0; b < blocks(); ++b) {
      std::copy(v.begin(), v.end(), buf.begin());
      block_transpose_apply(b, buf);
      block_apply(b, buf);
      for (std::size_t i = 0; i < d; ++i) out[i] += buf[i];
    }
  } else {
    for (std::size_t j = 0; j < m_; ++j) {
      const std::span<const double> a(dense_.data() + j * d, d);
      const double p = dot(a, v);
      for (std::size_t i = 0; i < d; ++i) out[i] += p * a[i];
    }
  }
  return out;
}

// ------------------------------------------------------------- operators

std::vector<double> SketchOperator::features(std::span<const double> x) const {
  if (x.size() != d_orig_) {
    throw std::invalid_argument("features: expected length " + std::to_string(d_orig_) + ", got " +
                                std::to_string(x.size()));
  }
  const double inv_m = 1.0 / static_cast<double>(m_);
  std::vector<double> out(m_);
  if (kind_ == OperatorKind::Structured) {
    std::vector<double> buf(d_pad_);
    for (std::size_t b = 0; b < blocks(); ++b) {
      std::fill(buf.begin(), buf.end(), 0.0);
      std::copy(x.begin(), x.end(), buf.begin());
      block_transpose_apply(b, buf);
      for (std::size_t i = 0; i < d_pad_; ++i) out[b * d_pad_ + i] = buf[i] * buf[i] * inv_m;
    }
  } else {
    for (std::size_t j = 0; j < m_; ++j) {
      const double p = dot(std::span<const double>(dense_.data() + j * d_pad_, d_pad_), x);
      out[j] = p * p * inv_m;
    }
  }
  return out;
}

std::vector<double> SketchOperator::apply(const SymmetricMatrix& M) const {
  if (M.dim() != d_orig_) {
    throw std::invalid_argument("apply: expected dimension " + std::to_string(d_orig_) + ", got " +
                                std::to_string(M.dim()));
  }
  const double inv_m = 1.0 / static_cast<double>(m_);
  const std::size_t d = d_pad_;
  std::vector<double> out(m_);
  if (kind_ == OperatorKind::Structured) {
    std::vector<double> padded(d * d, 0.0);
    for (std::size_t i = 0; i < d_orig_; ++i) {
      const auto r = M.row(i);
      std::copy(r.begin(), r.end(), padded.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    std::vector<double> mb(d * d);
    std::vector<double> mb_t(d * d);
    for (std::size_t b = 0; b < blocks(); ++b) {
      // Row k of mb = B^T M e_k, so mb = (B^T M)^T = M B.
      for (std::size_t k = 0; k < d; ++k) {
        std::span<double> row(mb.data() + k * d, d);
        if (k < d_orig_) {
          std::copy_n(padded.begin() + static_cast<std::ptrdiff_t>(k * d), d, row.begin());
          block_transpose_apply(b, row);
        } else {
          std::fill(row.begin(), row.end(), 0.0);
        }
      }
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) mb_t[j * d + i] = mb[i * d + j];
      // Row j of mb_t is (M B) e_j = M a_j; a_j^T M a_j = (B^T M a_j)_j.
      for (std::size_t j = 0; j < d; ++j) {
        std::span<double> row(mb_t.data() + j * d, d);
        block_transpose_apply(b, row);
        out[b * d + j] = row[j] * inv_m;
      }
    }
  } else {
    for (std::size_t j = 0; j < m_; ++j) {
      const std::span<const double> a(dense_.data() + j * d, d);
      double q = 0.0;
      for (std::size_t i = 0; i < d; ++i) q += a[i] * dot(M.row(i), a);
      out[j] = q * inv_m;
    }
  }
  return out;
}

SymmetricMatrix SketchOperator::adjoint(std::span<const double> y) const {
  if (y.size() != m_) {
    throw std::invalid_argument("adjoint: expected length " + std::to_string(m_) + ", got " +
                                std::to_string(y.size()));
  }
  const double inv_m = 1.0 / static_cast<double>(m_);
  const std::size_t d = d_pad_;
  std::vector<double> acc(d * d, 0.0);
  if (kind_ == OperatorKind::Structured) {
    std::vector<double> v(d);
    for (std::size_t b = 0; b < blocks(); ++b) {
      const double* yb = y.data() + b * d;
      bool any = false;
      for (std::size_t i = 0; i < d; ++i) any = any || yb[i] != 0.0;
      if (!any) continue;
      // Column k of B diag(y_b) B^T.
      for (std::size_t k = 0; k < d_orig_; ++k) {
        std::fill(v.begin(), v.end(), 0.0);
        v[k] = 1.0;
        block_transpose_apply(b, v);
        for (std::size_t i = 0; i < d; ++i) v[i] *= yb[i];
        block_apply(b, v);
        double* row = acc.data() + k * d;
        for (std::size_t i = 0; i < d; ++i) row[i] += v[i];
      }
    }
  } else {
    for (std::size_t j = 0; j < m_; ++j) {
      if (y[j] == 0.0) continue;
      const double* a = dense_.data() + j * d;
      for (std::size_t i = 0; i < d; ++i) {
        const double w = y[j] * a[i];
        double* row = acc.data() + i * d;
        for (std::size_t k = i; k < d; ++k) row[k] += w * a[k];
      }
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = i + 1; k < d; ++k) acc[k * d + i] = acc[i * d + k];
  }
  std::vector<double> out(d_orig_ * d_orig_);
  for (std::size_t i = 0; i < d_orig_; ++i)
    for (std::size_t k = 0; k < d_orig_; ++k) out[i * d_orig_ + k] = acc[i * d + k] * inv_m;
  return SymmetricMatrix(d_orig_, std::move(out));
}

std::vector<double> SketchOperator::column(std::size_t j) const {
  if (j >= m_) throw std::out_of_range("column: index out of range");
  if (kind_ == OperatorKind::Dense) {
    return {dense_.begin() + static_cast<std::ptrdiff_t>(j * d_pad_),
            dense_.begin() + static_cast<std::ptrdiff_t>((j + 1) * d_pad_)};
  }
  std::vector<double> v(d_pad_, 0.0);
  v[j % d_pad_] = 1.0;
  block_apply(j / d_pad_, v);
  return v;
}

Matrix SketchOperator::materialize() const {
  Matrix a(d_pad_, m_);
  for (std::size_t j = 0; j < m_; ++j) {
    const auto col = column(j);
    for (std::size_t i = 0; i < d_pad_; ++i) a(i, j) = col[i];
  }
  return a;
}

std::size_t SketchOperator::stored_entries() const noexcept {
  return kind_ == OperatorKind::Structured ? signs_.size() : dense_.size();
}

// ---------------------------------------------------------------- sketches

SketchAccumulator::SketchAccumulator(const SketchOperator& op) : op_(&op), mean_(op.m(), 0.0) {}

void SketchAccumulator::add(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("sketch: non-finite sample value");
  }
  const auto phi = op_->features(x);
  ++n_;
  const double w = 1.0 / static_cast<double>(n_);
  for (std::size_t j = 0; j < mean_.size(); ++j) mean_[j] += (phi[j] - mean_[j]) * w;
}

Sketch SketchAccumulator::result() const {
  Sketch s;
  s.values = mean_;
  s.d_orig = op_->d_orig();
  s.d_pad = op_->d_pad();
  s.m = op_->m();
  s.n = n_;
  s.fingerprint = op_->fingerprint();
  return s;
}

Sketch sketch_stream(const SketchOperator& op, const Matrix& data) {
  if (data.rows() > 0 && data.cols() != op.d_orig()) {
    throw std::invalid_argument("sketch_stream: data has " + std::to_string(data.cols()) +
                                " columns, operator expects " + std::to_string(op.d_orig()));
  }
  SketchAccumulator acc(op);
  for (std::size_t i = 0; i < data.rows(); ++i) acc.add(data.row(i));
  return acc.result();
}

Sketch sketch_covariance(const SketchOperator& op, const SymmetricMatrix& sigma) {
  Sketch s;
  s.values = op.apply(sigma);
  s.d_orig = op.d_orig();
  s.d_pad = op.d_pad();
  s.m = op.m();
  s.n = 1;
  s.fingerprint = op.fingerprint();
  return s;
}

Sketch merge(const Sketch& a, const Sketch& b) {
  if (!(a.fingerprint == b.fingerprint) || a.d_orig != b.d_orig || a.values.size() != b.values.size()) {
    throw DataError("merge: sketches come from different operators");
  }
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  Sketch out = a;
  out.n = a.n + b.n;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double total = na + nb;
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    out.values[j] = (na * a.values[j] + nb * b.values[j]) / total;
  }
  return out;
}

MonteCarloEstimate lambda_norm_estimate(const SymmetricMatrix& M, Distribution dist,
                                        std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("lambda_norm_mc: n_samples must be >= 1");
  if (!M.all_finite()) throw NumericalError("lambda_norm_mc: non-finite matrix entry");
  const std::size_t d = M.dim();
  SplitMix64 rng(seed);
  std::vector<double> a(d);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    draw_vector(rng, dist, a);
    const double q = std::abs(quadratic_form(M, a));
    const double delta = q - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (q - mean);
  }
  MonteCarloEstimate est;
  est.mean = mean;
  if (n_samples > 1) {
    const double var = m2 / static_cast<double>(n_samples - 1);
    est.std_error = std::sqrt(var / static_cast<double>(n_samples));
  }
  return est;
}

}  // namespace sketchprec
