#include "sketchprec/modelgen.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "sketchprec/errors.hpp"

namespace sketchprec {

const char* to_string(GraphKind kind) noexcept { return kind == GraphKind::Erdos ? "erdos" : "powerlaw"; }

std::optional<GraphKind> parse_graph_kind(std::string_view name) noexcept {
  if (name == "erdos") return GraphKind::Erdos;
  if (name == "powerlaw") return GraphKind::PowerLaw;
  return std::nullopt;
}

namespace {

std::vector<Edge> erdos_block(std::size_t size, double p, SplitMix64& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = i + 1; j < size; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return edges;
}

std::vector<Edge> powerlaw_tree(std::size_t size, SplitMix64& rng) {
  std::vector<Edge> edges;
  std::vector<std::uint64_t> degree(size, 0);
  for (std::size_t node = 1; node < size; ++node) {
    // Total weight of existing nodes: sum(deg + 1) = 2 * edges + node.
    std::uint64_t pick = rng.below(2 * edges.size() + node);
    std::size_t target = 0;
    while (pick >= degree[target] + 1) {
      pick -= degree[target] + 1;
      ++target;
    }
    edges.emplace_back(target, node);
    ++degree[target];
    ++degree[node];
  }
  return edges;
}

void validate(const GeneratorSpec& spec) {
  if (spec.d == 0 || spec.num_blocks == 0) throw std::invalid_argument("generator: d and blocks must be >= 1");
  if (spec.d % spec.num_blocks != 0) throw std::invalid_argument("generator: d must be divisible by the block count");
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw std::invalid_argument("generator: p must lie in (0, 1)");
}

}  // namespace

GroundTruth generate(const GeneratorSpec& spec) {
  validate(spec);
  const std::size_t d = spec.d;
  const std::size_t block = d / spec.num_blocks;
  SplitMix64 rng(spec.seed);

  std::vector<double> raw(d * d, 0.0);
  for (std::size_t l = 0; l < spec.num_blocks; ++l) {
    const auto edges = spec.kind == GraphKind::Erdos ? erdos_block(block, spec.p, rng) : powerlaw_tree(block, rng);
    for (auto [i, j] : edges) {
      const double value = rng.rademacher() * rng.uniform(1.0, 4.0);
      const std::size_t a = l * block + i;
      const std::size_t b = l * block + j;
      raw[a * d + b] = value;
      raw[b * d + a] = value;
    }
  }

  const double shift = 0.1 + std::max(0.0, -min_eigenvalue(SymmetricMatrix(d, std::span<const double>(raw))));
  for (std::size_t i = 0; i < d; ++i) raw[i * d + i] = shift;

  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = d; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  std::vector<double> permuted(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) permuted[i * d + j] = raw[perm[i] * d + perm[j]];

  GroundTruth gt;
  gt.theta = SymmetricMatrix(d, std::move(permuted));
  gt.sigma = spd_inverse(gt.theta);
  gt.support = support_edges(gt.theta);
  gt.nnz = d + 2 * gt.support.size();
  return gt;
}

GaussianSampler::GaussianSampler(const SymmetricMatrix& sigma, std::uint64_t seed)
    : root_(psd_sqrt(sigma)), rng_(seed), z_(sigma.dim()) {}

void GaussianSampler::next(std::span<double> out) {
  const std::size_t d = root_.dim();
  if (out.size() != d) throw std::invalid_argument("GaussianSampler: output length mismatch");
  for (auto& v : z_) v = rng_.gaussian();
  for (std::size_t i = 0; i < d; ++i) {
    const auto r = root_.row(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += r[k] * z_[k];
    out[i] = acc;
  }
}

Matrix sample_gaussian(const SymmetricMatrix& sigma, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_gaussian: n must be >= 1");
  GaussianSampler sampler(sigma, seed);
  Matrix data(n, sigma.dim());
  for (std::size_t i = 0; i < n; ++i) sampler.next(data.row(i));
  return data;
}

Matrix sample_gaussian(const GroundTruth& gt, std::size_t n, std::uint64_t seed) {
  return sample_gaussian(gt.sigma, n, seed);
}

SymmetricMatrix empirical_covariance(const Matrix& data) {
  if (data.rows() == 0 || data.cols() == 0) throw DataError("empirical_covariance: empty data");
  const std::size_t d = data.cols();
  std::vector<double> acc(d * d, 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto x = data.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      double* row = acc.data() + i * d;
      for (std::size_t j = i; j < d; ++j) row[j] += xi * x[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(data.rows());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      acc[i * d + j] *= inv_n;
      acc[j * d + i] = acc[i * d + j];
    }
  return SymmetricMatrix(d, std::move(acc));
}

bool model_membership(const SymmetricMatrix& theta, std::size_t k, double a, double b, double zero_tol) {
  if (support_edges(theta, zero_tol).size() > k) return false;
  const auto eig = eig_sym(theta);
  return eig.eigenvalues.front() >= a - 1e-9 && eig.eigenvalues.back() <= b + 1e-9;
}

}  // namespace sketchprec
