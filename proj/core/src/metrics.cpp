#include "sketchprec/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace sketchprec {

std::vector<Edge> support_edges(const SymmetricMatrix& a, double zero_tol) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i + 1; j < a.dim(); ++j)
      if (std::abs(a(i, j)) > zero_tol) edges.emplace_back(i, j);
  return edges;
}

double relative_error(const SymmetricMatrix& theta_true, const SymmetricMatrix& theta_est) {
  if (theta_true.dim() != theta_est.dim()) throw std::invalid_argument("relative_error: dimension mismatch");
  const double ref = fro_norm(theta_true);
  if (ref == 0.0) throw std::invalid_argument("relative_error: reference matrix is zero");
  return fro_norm(theta_true - theta_est) / ref;
}

SupportScore f1_support(const SymmetricMatrix& theta_true, const SymmetricMatrix& theta_est, double zero_tol) {
  if (theta_true.dim() != theta_est.dim()) throw std::invalid_argument("f1_support: dimension mismatch");
  SupportScore score;
  const std::size_t d = theta_true.dim();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const bool t = std::abs(theta_true(i, j)) > zero_tol;
      const bool e = std::abs(theta_est(i, j)) > zero_tol;
      if (t && e) ++score.tp;
      else if (e) ++score.fp;
      else if (t) ++score.fn;
    }
  }
  const std::size_t denom = 2 * score.tp + score.fp + score.fn;
  score.f1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(score.tp) / static_cast<double>(denom);
  return score;
}

}  // namespace sketchprec
