#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sketchprec/symmat.hpp"

namespace sketchprec {

/// Entries with magnitude at or below this count as zero when reading a support.
inline constexpr double kZeroTol = 1e-8;

using Edge = std::pair<std::size_t, std::size_t>;  // i < j

/// Strict upper-triangle entries with |a_ij| > zero_tol, in row-major order.
std::vector<Edge> support_edges(const SymmetricMatrix& a, double zero_tol = kZeroTol);

/// ||true - est||_Fro / ||true||_Fro. Throws std::invalid_argument on a zero
/// reference or mismatched dimensions.
double relative_error(const SymmetricMatrix& theta_true, const SymmetricMatrix& theta_est);

struct SupportScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double f1 = 1.0;  // 1 when there are no edges on either side
};

/// Off-diagonal support recovery.
SupportScore f1_support(const SymmetricMatrix& theta_true, const SymmetricMatrix& theta_est,
                        double zero_tol = kZeroTol);

}  // namespace sketchprec
