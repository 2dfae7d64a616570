#include "sketchprec/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sketchprec/errors.hpp"

namespace sketchprec {

namespace {

// Inner coordinate-descent tolerances, relative to tol * scale.
constexpr double kSweepInnerFactor = 1e-2;
constexpr double kFinalInnerFactor = 1e-6;
constexpr double kSchurFloor = 1e-10;
constexpr double kRidgeMargin = 1e-6;
constexpr int kRidgeAttempts = 5;

double soft_threshold(double u, double mu) {
  // |u| == mu maps to zero.
  if (u > mu) return u - mu;
  if (u < -mu) return u + mu;
  return 0.0;
}

/// Lasso  min_b 0.5 b^T W11 b - b^T z + mu ||b||_1  over coordinates k != skip,
/// where W11 is W with row/column `skip` removed. `q` holds W11 b and is kept
/// in sync. Returns the number of sweeps performed.
int lasso_cd(const double* w, std::size_t d, std::size_t skip, const double* z, double mu, double* b,
             double* q, int max_sweeps, double tol) {
  auto update = [&](std::size_t k) -> double {
    const double wkk = w[k * d + k];
    const double old = b[k];
    const double u = z[k] - (q[k] - wkk * old);
    const double nb = soft_threshold(u, mu) / wkk;
    if (nb == old) return 0.0;
    const double delta = nb - old;
    b[k] = nb;
    const double* wk = w + k * d;
    for (std::size_t l = 0; l < d; ++l) q[l] += wk[l] * delta;
    return std::abs(delta) * wkk;
  };

  std::vector<std::size_t> active;
  active.reserve(d);
  int sweeps = 0;
  while (sweeps < max_sweeps) {
    double max_change = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      if (k != skip) max_change = std::max(max_change, update(k));
    }
    ++sweeps;
    if (max_change <= tol) break;
    active.clear();
    for (std::size_t k = 0; k < d; ++k) {
      if (k != skip && b[k] != 0.0) active.push_back(k);
    }
    while (sweeps < max_sweeps) {
      double active_change = 0.0;
      for (std::size_t k : active) active_change = std::max(active_change, update(k));
      ++sweeps;
      if (active_change <= tol) break;
    }
  }
  return sweeps;
}

void init_q(const double* w, std::size_t d, std::size_t skip, const double* b, double* q) {
  std::fill(q, q + d, 0.0);
  for (std::size_t l = 0; l < d; ++l) {
    if (l == skip || b[l] == 0.0) continue;
    const double* wl = w + l * d;
    for (std::size_t k = 0; k < d; ++k) q[k] += wl[k] * b[l];
  }
}

bool positive_definite(std::vector<double> buf, std::size_t d) { return cholesky_in_place(buf, d); }

enum class RunStatus { Converged, MaxedOut, Stalled };

struct Run {
  RunStatus status = RunStatus::Stalled;
  int sweeps = 0;
  std::vector<double> w;
  std::vector<double> theta;
};

/// Dual block coordinate descent from a given starting point.
Run run_bcd(const std::vector<double>& z, std::size_t d, const GlassoParams& p, std::vector<double> w,
            std::vector<double> beta, const GlassoOptions& options) {
  Run run;
  double scale = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) scale += std::abs(z[i * d + j]);
  scale /= static_cast<double>(d * (d - 1));
  if (scale == 0.0) scale = 1.0;

  const double stop = p.tol * scale;
  const double inner_tol = kSweepInnerFactor * stop;
  std::vector<double> q(d);

  run.status = RunStatus::MaxedOut;
  for (int sweep = 0; sweep < p.max_outer; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double* b = beta.data() + i * d;
      init_q(w.data(), d, i, b, q.data());
      lasso_cd(w.data(), d, i, z.data() + i * d, p.lambda, b, q.data(), p.max_inner, inner_tol);
      double quad = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        if (k != i) quad += b[k] * q[k];
      const double schur = z[i * d + i] - quad;
      if (!std::isfinite(schur) || schur <= kSchurFloor * z[i * d + i]) {
        run.status = RunStatus::Stalled;
        run.sweeps = sweep + 1;
        return run;
      }
      for (std::size_t k = 0; k < d; ++k) {
        if (k == i) continue;
        change += std::abs(q[k] - w[i * d + k]);
        w[i * d + k] = q[k];
        w[k * d + i] = q[k];
      }
    }
    run.sweeps = sweep + 1;
    if (options.on_sweep) options.on_sweep(run.sweeps, SymmetricMatrix(d, std::span<const double>(w)));
    if (change / static_cast<double>(d * (d - 1)) <= stop) {
      run.status = RunStatus::Converged;
      break;
    }
  }

  // Final pass: tight column solves against the final W give Theta with exact zeros.
  run.theta.assign(d * d, 0.0);
  const double final_tol = kFinalInnerFactor * stop;
  for (std::size_t i = 0; i < d; ++i) {
    double* b = beta.data() + i * d;
    init_q(w.data(), d, i, b, q.data());
    lasso_cd(w.data(), d, i, z.data() + i * d, p.lambda, b, q.data(), p.max_inner, final_tol);
    double quad = 0.0;
    for (std::size_t k = 0; k < d; ++k)
      if (k != i) quad += b[k] * q[k];
    const double schur = z[i * d + i] - quad;
    if (!std::isfinite(schur) || schur <= kSchurFloor * z[i * d + i]) {
      run.status = RunStatus::Stalled;
      return run;
    }
    const double tii = 1.0 / schur;
    run.theta[i * d + i] = tii;
    for (std::size_t k = 0; k < d; ++k)
      if (k != i) run.theta[k * d + i] = -b[k] * tii;
  }
  run.w = std::move(w);
  return run;
}

std::vector<double> beta_from_precision(const SymmetricMatrix& theta) {
  const std::size_t d = theta.dim();
  std::vector<double> beta(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double tii = theta(i, i);
    if (!(tii > 0.0)) return std::vector<double>(d * d, 0.0);
    for (std::size_t k = 0; k < d; ++k)
      if (k != i) beta[i * d + k] = -theta(k, i) / tii;
  }
  return beta;
}

/// Candidate starting points in order of preference.
std::vector<std::pair<std::vector<double>, std::vector<double>>> starting_points(
    const std::vector<double>& z, std::size_t d, double lambda, const GlassoOptions& options) {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
  const std::vector<double> zero_beta(d * d, 0.0);

  if (options.warm_start != nullptr && options.warm_start->covariance.dim() == d) {
    const auto& prev = *options.warm_start;
    std::vector<double> w(prev.covariance.data().begin(), prev.covariance.data().end());
    for (std::size_t i = 0; i < d; ++i) w[i * d + i] = z[i * d + i];
    if (positive_definite(w, d)) out.emplace_back(std::move(w), beta_from_precision(prev.precision));
  }
  if (positive_definite(z, d)) {
    out.emplace_back(z, zero_beta);
    return out;
  }
  std::vector<double> shrunk = z;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) shrunk[i * d + j] = soft_threshold(z[i * d + j], lambda);
  if (positive_definite(shrunk, d)) {
    out.emplace_back(std::move(shrunk), zero_beta);
    return out;
  }
  std::vector<double> diag(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) diag[i * d + i] = z[i * d + i];
  out.emplace_back(std::move(diag), zero_beta);
  return out;
}

void validate(const SymmetricMatrix& z, const GlassoParams& p) {
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) throw std::invalid_argument("glasso: lambda must be >= 0");
  if (!(p.tol > 0.0)) throw std::invalid_argument("glasso: tol must be > 0");
  if (p.max_outer < 1 || p.max_inner < 1) throw std::invalid_argument("glasso: iteration caps must be >= 1");
  if (!z.all_finite()) throw NumericalError("glasso: non-finite input matrix");
  for (std::size_t i = 0; i < z.dim(); ++i) {
    if (!(z(i, i) > 0.0)) throw std::invalid_argument("glasso: non-positive diagonal entry");
  }
}

}  // namespace

PrecisionEstimate glasso(const SymmetricMatrix& z_in, const GlassoParams& params,
                         const GlassoOptions& options) {
  validate(z_in, params);
  const std::size_t d = z_in.dim();
  if (d == 1) {
    const double inv = 1.0 / z_in(0, 0);
    return PrecisionEstimate{z_in, SymmetricMatrix::scaled_identity(1, inv), 0, 0.0, true};
  }

  std::vector<double> z(z_in.data().begin(), z_in.data().end());
  Run run;
  // Every feasible W differs from Z by at most lambda per off-diagonal entry,
  // so lambda_min(W) <= lambda_min(Z) + lambda (d - 1). When that bound is not
  // positive no starting point can succeed and the ridge is applied directly.
  double zmin = 0.0;
  bool hopeless = false;
  if (!positive_definite(z, d)) {
    zmin = min_eigenvalue(z_in);
    hopeless = zmin + params.lambda * static_cast<double>(d - 1) <= 0.0;
  }
  if (!hopeless) {
    for (auto& [w0, beta0] : starting_points(z, d, params.lambda, options)) {
      run = run_bcd(z, d, params, std::move(w0), std::move(beta0), options);
      if (run.status != RunStatus::Stalled) break;
    }
  }

  double ridge = 0.0;
  if (run.status == RunStatus::Stalled) {
    if (!hopeless) zmin = min_eigenvalue(z_in);
    // A margin of 1e-6 can be thinner than the inexact column solves resolve,
    // so a stalled retry widens it tenfold (a few times at most).
    const std::vector<double> base = z;
    double margin = kRidgeMargin;
    for (int attempt = 0;; ++attempt) {
      ridge = std::max(0.0, -zmin) + margin;
      z = base;
      for (std::size_t i = 0; i < d; ++i) z[i * d + i] += ridge;
      run = run_bcd(z, d, params, z, std::vector<double>(d * d, 0.0), options);
      if (run.status != RunStatus::Stalled) break;
      if (attempt + 1 == kRidgeAttempts) {
        throw NumericalError("glasso: covariance iterate lost positive definiteness after ridge rescue");
      }
      margin *= 10.0;
    }
  }

  const SymmetricMatrix zr(d, std::span<const double>(z));
  PrecisionEstimate est{SymmetricMatrix(d, std::move(run.w)), SymmetricMatrix(d, std::move(run.theta)),
                        run.sweeps, 0.0, run.status == RunStatus::Converged, ridge > 0.0, ridge};
  est.kkt_residual = kkt_residual(zr, est.covariance, est.precision, params.lambda);
  return est;
}

double kkt_residual(const SymmetricMatrix& z, const SymmetricMatrix& w, const SymmetricMatrix& theta,
                    double lambda) {
  const std::size_t d = z.dim();
  if (w.dim() != d || theta.dim() != d) throw std::invalid_argument("kkt_residual: dimension mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    worst = std::max(worst, std::abs(w(i, i) - z(i, i)));
    for (std::size_t j = i + 1; j < d; ++j) {
      const double gap = w(i, j) - z(i, j);
      const double t = theta(i, j);
      double r;
      if (t == 0.0) {
        r = std::max(0.0, std::abs(gap) - lambda);
      } else {
        r = std::abs(gap - lambda * (t > 0.0 ? 1.0 : -1.0));
      }
      worst = std::max(worst, r);
    }
  }
  return worst;
}

double glasso_objective(const SymmetricMatrix& z, const SymmetricMatrix& theta, double lambda) {
  const auto eig = eig_sym(theta);
  if (eig.eigenvalues.front() <= 0.0) return std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (double l : eig.eigenvalues) logdet += std::log(l);
  return -logdet + inner(z, theta) + 2.0 * lambda * l1_off(theta);
}

}  // namespace sketchprec
