#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchprec/decoder.hpp"
#include "sketchprec/glasso.hpp"
#include "sketchprec/modelgen.hpp"
#include "sketchprec/sketch.hpp"

namespace sketchprec {

/// lambda ladder used when a config does not list one.
std::vector<double> default_lambda_grid();

struct SeedTriple {
  std::uint64_t model = 1;
  std::uint64_t data = 2;
  std::uint64_t op = 3;
};

/// One experiment grid. A sample count of nullopt is the asymptotic regime,
/// where the true covariance is sketched directly.
struct ExperimentConfig {
  GeneratorSpec generator;
  std::vector<std::optional<std::uint64_t>> n_grid{std::nullopt};
  std::vector<std::size_t> m_grid;
  std::vector<double> lambda_grid = default_lambda_grid();
  StepSize gamma = SafeAutoStep{};
  int t_max = 100;
  int repeats = 1;
  SeedTriple seeds;
  bool metric_re = true;
  bool metric_f1 = true;
  bool baseline_glasso = false;
  bool baseline_pinv = false;
  OperatorKind op_kind = OperatorKind::Structured;
  Distribution op_dist = Distribution::Gaussian;
};

/// Parses the JSON config format; unknown keys and malformed values throw DataError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string gamma_to_string(const StepSize& gamma);

enum class Method { Decode, GlassoFull, Pinv };
const char* to_string(Method method) noexcept;

struct ResultRow {
  Method method = Method::Decode;
  GraphKind generator = GraphKind::Erdos;
  std::size_t d = 0;
  std::size_t blocks = 0;
  std::optional<std::uint64_t> n;  // nullopt: asymptotic
  std::size_t m = 0;               // requested; 0 for baselines
  std::size_t m_eff = 0;           // after structured rounding
  double lambda = 0.0;
  std::string gamma;
  int t_max = 0;
  int repeat = 0;
  SeedTriple seeds;  // per-repeat seeds actually used
  double re = 0.0;
  double f1 = 0.0;
  SupportScore support;
  std::size_t nnz_true = 0;
  std::size_t nnz_est = 0;
  std::int64_t wall_ms = 0;
  bool converged = false;
  int spd_violations = 0;
  bool failed = false;
  std::string error;
};

/// Strict ordering on the grid coordinates (method, n, m, lambda, repeat).
bool row_less(const ResultRow& a, const ResultRow& b);

struct GridOptions {
  /// <= 0 uses SKETCHPREC_WORKERS when set, otherwise the hardware concurrency.
  int workers = 0;
};

int resolve_workers(int requested);

/// Runs every (n, m, lambda, repeat) cell plus the requested baselines. Cells
/// that throw are reported with failed = true; the grid continues. Rows are
/// sorted with row_less.
std::vector<ResultRow> run_grid(const ExperimentConfig& cfg, const GridOptions& options = {});

struct BestLambda {
  Method method = Method::Decode;
  std::optional<std::uint64_t> n;
  std::size_t m = 0;
  std::string metric;  // "re" or "f1"
  double lambda = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

/// Per (method, n, m): lambda with the best mean score over repeats (lowest RE,
/// highest F1), ties toward the larger lambda. Failed rows are skipped.
std::vector<BestLambda> best_lambda(const std::vector<ResultRow>& rows, bool re = true, bool f1 = true);

/// Results CSV with the "# sketchprec-results v1" header line.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool with_re = true,
                       bool with_f1 = true);
void write_best_csv(std::ostream& out, const std::vector<BestLambda>& best);

/// Graphical lasso on the empirical covariance of `data`.
PrecisionEstimate baseline_glasso(const Matrix& data, double lambda, const GlassoParams& params = {});
PrecisionEstimate baseline_glasso(const SymmetricMatrix& sigma_hat, double lambda, const GlassoParams& params = {});
/// Pseudo-inverse of the empirical covariance of `data`.
SymmetricMatrix baseline_pinv(const Matrix& data);

struct RipProbeConfig {
  std::size_t d = 32;
  std::size_t k = 32;  // max off-diagonal edges per precision matrix
  double a = 0.5;      // spectrum of Theta is mapped into [a, b]
  double b = 2.0;
  std::vector<std::size_t> m_grid{256, 1024};
  std::size_t n_pairs = 50;
  std::size_t n_mc = 20000;
  OperatorKind kind = OperatorKind::Dense;
  Distribution dist = Distribution::Gaussian;
  std::uint64_t seed = 11;
};

struct RipProbeRow {
  std::size_t m = 0;
  std::size_t m_eff = 0;
  std::vector<double> deviations;  // |‖A(U)‖_1 - 1| per pair
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Empirical secant deviations of the sketch on differences of model-set
/// covariances, normalized by a Monte-Carlo Lambda-norm. A falsification probe;
/// it bounds nothing.
std::vector<RipProbeRow> rip_probe(const RipProbeConfig& cfg, int workers = 0);
void write_rip_csv(std::ostream& out, const std::vector<RipProbeRow>& rows);

}  // namespace sketchprec
