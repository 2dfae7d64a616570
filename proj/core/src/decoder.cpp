#include "sketchprec/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sketchprec/errors.hpp"
#include "sketchprec/rng.hpp"

namespace sketchprec {

namespace {

std::vector<double> residual(const SketchOperator& op, const SymmetricMatrix& sigma, const Sketch& s) {
  auto r = op.apply(sigma);
  for (std::size_t j = 0; j < r.size(); ++j) r[j] -= s.values[j];
  return r;
}

double half_sq_norm(const std::vector<double>& r) {
  double acc = 0.0;
  for (double v : r) acc += v * v;
  return 0.5 * acc;
}

void check_shapes(const SketchOperator& op, const SymmetricMatrix& sigma, const Sketch& s) {
  if (s.values.size() != op.m()) throw std::invalid_argument("sketch length does not match the operator");
  if (sigma.dim() != op.d_orig()) throw std::invalid_argument("matrix dimension does not match the operator");
}

void validate(const SketchOperator& op, const Sketch& s, const DecoderConfig& cfg) {
  if (!(s.fingerprint == op.fingerprint()) || s.values.size() != op.m() || s.d_orig != op.d_orig()) {
    throw DataError("sketch was not produced by this operator (fingerprint mismatch)");
  }
  if (s.empty()) throw DataError("cannot decode an empty sketch");
  if (cfg.t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(cfg.lam_min_hat >= 0.0)) throw std::invalid_argument("lam_min_hat must be >= 0");
  if (const double* g = std::get_if<double>(&cfg.gamma); g != nullptr && !(*g > 0.0 && std::isfinite(*g))) {
    throw std::invalid_argument("gamma must be > 0");
  }
  if (cfg.safe_refresh < 1 || !(cfg.safe_fraction > 0.0 && cfg.safe_fraction < 1.0)) {
    throw std::invalid_argument("invalid safe step-size settings");
  }
  if (cfg.init && (cfg.init->dim() != op.d_orig() || !is_spd(*cfg.init))) {
    throw std::invalid_argument("initial guess must be SPD with the operator's dimension");
  }
}

SymmetricMatrix initial_guess(const SketchOperator& op, const Sketch& s, const DecoderConfig& cfg) {
  if (cfg.init) return *cfg.init;
  // E[a^T S a] = tr(S) / d_pad for the padded unit-scale directions, so
  // rescaling by d_pad / d_orig makes tr(Sigma_0) match the sketched trace.
  // mean_j(m s_j) is just the sum of the sketch.
  double mean = 0.0;
  for (double v : s.values) mean += v;
  double c = mean * static_cast<double>(op.d_pad()) / static_cast<double>(op.d_orig());
  if (!(c > 0.0) || !std::isfinite(c)) c = 1.0;
  return SymmetricMatrix::scaled_identity(op.d_orig(), c);
}

}  // namespace

SymmetricMatrix gradient(const SketchOperator& op, const SymmetricMatrix& sigma, const Sketch& s) {
  check_shapes(op, sigma, s);
  return op.adjoint(residual(op, sigma, s));
}

double fidelity(const SketchOperator& op, const SymmetricMatrix& sigma, const Sketch& s) {
  check_shapes(op, sigma, s);
  return half_sq_norm(residual(op, sigma, s));
}

StepBound safe_step(const SketchOperator& op, const SymmetricMatrix& sigma_t, double lam_min_hat) {
  if (sigma_t.dim() != op.d_orig()) throw std::invalid_argument("safe_step: dimension mismatch");
  const auto eig = eig_sym(sigma_t);
  const double lmin = eig.eigenvalues.front();
  const double lmax = eig.eigenvalues.back();
  if (!(lmin > 0.0)) throw NumericalError("safe_step: Sigma_t is not positive definite");
  if (lmax < lam_min_hat) return {true, 0.0};
  const double m = static_cast<double>(op.m());
  const double scale = m * m / (op.max_column_norm_sq() * op.sigma_max_sq());
  const double gap = lmax - lam_min_hat;
  // lmax == lam_min_hat leaves the denominator at zero: any step is admissible.
  if (gap <= 0.0) return {true, 0.0};
  return {false, scale * lmin / gap};
}

double normal_operator_norm(const SketchOperator& op, int max_iterations, double rel_tol) {
  const std::size_t d = op.d_orig();
  SplitMix64 rng(0x5eed'0f'a11ULL);
  std::vector<double> start(d * d);
  for (auto& v : start) v = rng.gaussian();
  SymmetricMatrix x(d, std::span<const double>(start));
  x = x * (1.0 / fro_norm(x));

  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    SymmetricMatrix y = op.adjoint(op.apply(x));
    const double next = inner(x, y);
    const double norm = fro_norm(y);
    if (norm == 0.0) return 0.0;
    x = y * (1.0 / norm);
    if (it > 0 && std::abs(next - estimate) <= rel_tol * std::abs(next)) return next;
    estimate = next;
  }
  return estimate;
}

namespace {

bool cholesky_ok(const SymmetricMatrix& a) {
  std::vector<double> buf(a.data().begin(), a.data().end());
  return cholesky_in_place(buf, a.dim());
}

}  // namespace

DecodeResult decode(const SketchOperator& op, const Sketch& s, const DecoderConfig& cfg) {
  validate(op, s, cfg);

  const double m = static_cast<double>(op.m());
  // Multiplier turning a step in the configured units into a step on the
  // normalized gradient.
  const double unit = cfg.fidelity == FidelityScale::PerMeasurement ? m * m : 1.0;

  double lipschitz_gamma = 0.0;
  auto lipschitz = [&]() {
    if (lipschitz_gamma == 0.0) {
      const double l = normal_operator_norm(op) * unit;
      if (!(l > 0.0)) throw NumericalError("decode: sketching operator has a zero normal operator");
      lipschitz_gamma = 1.0 / l;
    }
    return lipschitz_gamma;
  };

  SymmetricMatrix sigma = initial_guess(op, s, cfg);
  DecodeResult result;
  PrecisionEstimate current;
  bool have_estimate = false;

  double gamma = 0.0;
  if (const double* g = std::get_if<double>(&cfg.gamma)) {
    gamma = *g;
  } else if (std::holds_alternative<LipschitzStep>(cfg.gamma)) {
    gamma = lipschitz();
  }
  const bool safe_auto = std::holds_alternative<SafeAutoStep>(cfg.gamma);

  double f_first = 0.0;
  double f_prev = std::numeric_limits<double>::quiet_NaN();
  const bool need_f = cfg.record_trace || cfg.early_stop;

  auto refresh_safe = [&]() {
    const StepBound bound = safe_step(op, sigma, cfg.lam_min_hat);
    gamma = bound.unbounded ? lipschitz() : cfg.safe_fraction * bound.value / unit;
  };

  for (int t = 0; t < cfg.t_max; ++t) {
    const bool refreshed = safe_auto && t % cfg.safe_refresh == 0;
    if (refreshed) refresh_safe();

    const auto r = residual(op, sigma, s);
    if (need_f) {
      const double f = half_sq_norm(r);
      if (!std::isfinite(f)) throw NumericalError("decode: non-finite objective at iteration " + std::to_string(t));
      if (t == 0) f_first = f;
      if (cfg.record_trace) result.objective_trace.push_back(f);
      if (cfg.early_stop && t > 0 && std::abs(f - f_prev) <= 1e-12 * std::max(1.0, f_first)) break;
      f_prev = f;
    }

    const SymmetricMatrix grad = op.adjoint(r);
    SymmetricMatrix half = sigma - grad * (gamma * unit);
    // A step size cached since the last refresh can be too long for the
    // current iterate; the bound is then recomputed right away.
    if (safe_auto && !refreshed && !cholesky_ok(half)) {
      refresh_safe();
      half = sigma - grad * (gamma * unit);
    }
    if (!half.all_finite()) {
      throw NumericalError("decode: non-finite gradient iterate at iteration " + std::to_string(t));
    }

    const auto diag = half.diagonal();
    if (*std::min_element(diag.begin(), diag.end()) <= 0.0) {
      const double beta = std::max(0.0, -min_eigenvalue(half)) + 1e-6;
      half = half + SymmetricMatrix::scaled_identity(half.dim(), beta);
      ++result.spd_violations;
    }

    GlassoParams gp = cfg.glasso;
    gp.lambda = cfg.lambda * gamma;
    GlassoOptions go;
    if (cfg.warm_start && have_estimate) go.warm_start = &current;
    current = glasso(half, gp, go);
    have_estimate = true;
    if (current.ridge_rescued) ++result.spd_violations;

    sigma = current.covariance;
    if (!sigma.all_finite() || !current.precision.all_finite()) {
      throw NumericalError("decode: non-finite denoised iterate at iteration " + std::to_string(t));
    }
    result.iterations = t + 1;
    if (cfg.on_iteration && !cfg.on_iteration(t + 1, sigma)) break;
  }

  if (cfg.record_trace) result.objective_trace.push_back(fidelity(op, sigma, s));
  result.estimate = std::move(current);
  result.gamma_used = gamma;
  return result;
}

}  // namespace sketchprec
