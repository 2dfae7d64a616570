#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sketchprec/metrics.hpp"
#include "sketchprec/rng.hpp"
#include "sketchprec/symmat.hpp"

namespace sketchprec {

enum class GraphKind { Erdos, PowerLaw };

const char* to_string(GraphKind kind) noexcept;
/// "erdos" or "powerlaw"; nullopt otherwise.
std::optional<GraphKind> parse_graph_kind(std::string_view name) noexcept;

struct GeneratorSpec {
  GraphKind kind = GraphKind::Erdos;
  std::size_t d = 64;
  std::size_t num_blocks = 8;  // L, with block size d / L
  double p = 0.2;              // Erdos edge probability
  std::uint64_t seed = 0;
};

struct GroundTruth {
  SymmetricMatrix theta{1};
  SymmetricMatrix sigma{1};
  std::vector<Edge> support;  // i < j
  std::size_t nnz = 0;        // d + 2 |support|
};

/// Block-diagonal sparse precision matrix with a random row/column permutation.
///
/// Each block is an Erdos-Renyi graph with edge probability p, or a tree grown
/// by preferential attachment (weight degree + 1). Edge weights are +-u with
/// u ~ Unif[1, 4]; the diagonal is then shifted by 0.1 + max(0, -lambda_min)
/// so that lambda_min(theta) >= 0.1.
GroundTruth generate(const GeneratorSpec& spec);

/// Draws x = Sigma^{1/2} z with z standard normal, one vector at a time.
class GaussianSampler {
 public:
  GaussianSampler(const SymmetricMatrix& sigma, std::uint64_t seed);

  std::size_t dim() const noexcept { return root_.dim(); }
  void next(std::span<double> out);

 private:
  SymmetricMatrix root_;
  SplitMix64 rng_;
  std::vector<double> z_;
};

/// n x d matrix of i.i.d. N(0, sigma) rows.
Matrix sample_gaussian(const GroundTruth& gt, std::size_t n, std::uint64_t seed);
Matrix sample_gaussian(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed);

/// (1/n) sum_i x_i x_i^T, uncentered. Throws DataError on empty data.
SymmetricMatrix empirical_covariance(const Matrix& data);

/// Off-diagonal nnz (|.| > zero_tol) <= 2k and spectrum inside [a - 1e-9, b + 1e-9].
bool model_membership(const SymmetricMatrix& theta, std::size_t k, double a, double b,
                      double zero_tol = kZeroTol);

}  // namespace sketchprec
