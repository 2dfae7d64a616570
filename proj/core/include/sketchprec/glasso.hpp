#pragma once

#include <functional>

#include "sketchprec/symmat.hpp"

namespace sketchprec {

struct GlassoParams {
  double lambda = 0.0;  // penalty on every off-diagonal entry of Theta
  double tol = 1e-4;    // mean |delta W_ij| per sweep, relative to mean |Z_ij| (i != j)
  int max_outer = 100;
  int max_inner = 1000;
};

/// Paired covariance / precision output of the graphical lasso.
struct PrecisionEstimate {
  SymmetricMatrix covariance{1};  // W
  SymmetricMatrix precision{1};   // Theta ~= W^{-1}, exactly sparse
  int iterations = 0;          // outer sweeps
  double kkt_residual = 0.0;
  bool converged = false;
  bool ridge_rescued = false;  // Z was replaced by Z + ridge * I
  double ridge = 0.0;
};

struct GlassoOptions {
  /// Previous solution on a nearby problem. Used only if its covariance is
  /// positive definite once its diagonal is replaced by diag(Z).
  const PrecisionEstimate* warm_start = nullptr;
  /// Called with W after every outer sweep.
  std::function<void(int sweep, const SymmetricMatrix& w)> on_sweep;
};

/// Graphical lasso by block coordinate descent on the dual.
///
/// Solves  min_Theta  -log det Theta + <Z, Theta> + lambda * sum_{i != j} |Theta_ij|
/// and returns W = Theta^{-1} alongside Theta. One row/column of W is updated at
/// a time by solving a lasso with cyclic coordinate descent; the diagonal of W
/// is pinned to diag(Z). Z may be indefinite as long as its diagonal is
/// positive. If a column update would leave W indefinite, Z is replaced by
/// Z + beta I with beta = max(0, -lambda_min(Z)) + 1e-6 and the result is
/// flagged as ridge-rescued.
///
/// Throws std::invalid_argument for a non-positive diagonal or invalid
/// parameters, and NumericalError for non-finite input.
PrecisionEstimate glasso(const SymmetricMatrix& z, const GlassoParams& params,
                         const GlassoOptions& options = {});

/// Largest violation of the optimality conditions of the problem above:
/// |W_ii - Z_ii|, max(0, |W_ij - Z_ij| - lambda) where Theta_ij == 0 and
/// |W_ij - Z_ij - lambda sign(Theta_ij)| where Theta_ij != 0.
double kkt_residual(const SymmetricMatrix& z, const SymmetricMatrix& w, const SymmetricMatrix& theta,
                    double lambda);

/// -log det Theta + <Z, Theta> + lambda * sum_{i != j} |Theta_ij|; +inf if Theta is not SPD.
double glasso_objective(const SymmetricMatrix& z, const SymmetricMatrix& theta, double lambda);

}  // namespace sketchprec
