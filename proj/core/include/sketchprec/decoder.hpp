#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "sketchprec/glasso.hpp"
#include "sketchprec/sketch.hpp"
#include "sketchprec/symmat.hpp"

namespace sketchprec {

/// gamma recomputed from the positive-definiteness bound every few iterations.
struct SafeAutoStep {};
/// gamma = 1 / L with L the largest eigenvalue of the (scaled) normal operator A*A.
struct LipschitzStep {};

using StepSize = std::variant<double, SafeAutoStep, LipschitzStep>;

/// Units of the data-fidelity term used by the iteration.
///
/// Normalized:     f(S) = 1/2 ||A(S) - s||^2 with A carrying its 1/m factor.
/// PerMeasurement: f(S) = 1/2 ||m (A(S) - s)||^2, i.e. residuals of the raw
///                 projections a_j^T S a_j. gamma and lambda then have the
///                 scale used by the published experiment settings.
enum class FidelityScale { PerMeasurement, Normalized };

struct DecoderConfig {
  double lambda = 0.0;
  StepSize gamma = SafeAutoStep{};
  int t_max = 100;
  /// Sigma_0; when empty the scaled identity c I with c = mean_j(m s_j) is used.
  std::optional<SymmetricMatrix> init;
  /// Lower bound on lambda_min of the empirical covariance.
  double lam_min_hat = 0.0;
  bool record_trace = false;
  /// Stop once |f_t - f_{t-1}| <= 1e-12 max(1, f_0).
  bool early_stop = false;
  FidelityScale fidelity = FidelityScale::PerMeasurement;
  int safe_refresh = 25;
  double safe_fraction = 0.9;
  /// Tolerances and caps of the inner graphical lasso (its lambda is ignored).
  GlassoParams glasso{};
  bool warm_start = true;
  /// Called after every iteration with its count and Sigma_{t+1}. Returning
  /// false stops the run there (progress reporting, deadlines).
  std::function<bool(int, const SymmetricMatrix&)> on_iteration;
};

struct DecodeResult {
  PrecisionEstimate estimate;
  std::vector<double> objective_trace;  // f(Sigma_t), normalized units
  int spd_violations = 0;               // ridge rescues of the denoising step
  double gamma_used = 0.0;              // last step size, in the configured fidelity units
  int iterations = 0;
};

/// Step-size bound keeping Sigma_t - gamma grad f(Sigma_t) positive definite
/// (normalized units).
struct StepBound {
  bool unbounded = false;
  double value = 0.0;
};

/// grad f(Sigma) = A*(A(Sigma) - s), normalized units.
SymmetricMatrix gradient(const SketchOperator& op, const SymmetricMatrix& sigma, const Sketch& s);

/// f(Sigma) = 1/2 ||A(Sigma) - s||^2, normalized units.
double fidelity(const SketchOperator& op, const SymmetricMatrix& sigma, const Sketch& s);

/// Unbounded when lambda_max(Sigma_t) < lam_min_hat, otherwise
/// m^2 / (max_j ||a_j||^2 sigma_max(A)^2) * lambda_min(Sigma_t) / (lambda_max(Sigma_t) - lam_min_hat).
/// Throws NumericalError if Sigma_t is not SPD.
StepBound safe_step(const SketchOperator& op, const SymmetricMatrix& sigma_t, double lam_min_hat);

/// Largest eigenvalue of A*A on symmetric d_orig x d_orig matrices
/// (normalized units), by power iteration.
double normal_operator_norm(const SketchOperator& op, int max_iterations = 200, double rel_tol = 1e-6);

/// Iterative decoder: gradient step on the sketch fidelity, then graphical
/// lasso denoising with penalty lambda * gamma, for t_max iterations.
DecodeResult decode(const SketchOperator& op, const Sketch& s, const DecoderConfig& cfg);

}  // namespace sketchprec
