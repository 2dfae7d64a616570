// Acceptance suite. Each criterion prints one PASS/FAIL line; run a single
// one with --criterion N (ctest registers each separately).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "common/oracles.hpp"
#include "sketchprec/decoder.hpp"
#include "sketchprec/experiment.hpp"
#include "sketchprec/fwht.hpp"
#include "sketchprec/glasso.hpp"
#include "sketchprec/metrics.hpp"
#include "sketchprec/modelgen.hpp"
#include "sketchprec/sketch.hpp"

using namespace sketchprec;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ------------------------------------------------------------------ 1

// Seconds per transform, best of several timed batches.
double time_fwht(std::size_t d) {
  SplitMix64 rng(d);
  std::vector<double> x(d);
  for (double& v : x) v = rng.gaussian();
  const int reps = static_cast<int>(std::max<std::size_t>(4, (std::size_t{1} << 22) / d));
  double best = 1e300;
  for (int batch = 0; batch < 5; ++batch) {
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
      fwht_inplace(x);
      // Keeps magnitudes bounded across repetitions.
      x[0] *= 1.0 / static_cast<double>(d);
    }
    best = std::min(best, seconds_since(t0) / reps);
  }
  return best;
}

Outcome criterion_fwht() {
  SplitMix64 rng(101);
  bool exact = true;
  double worst_rel = 0.0;
  for (std::size_t d = 2; d <= 1024; d *= 2) {
    const auto h = oracle::sylvester(d);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> xi(d), xr(d);
      for (std::size_t i = 0; i < d; ++i) {
        xi[i] = static_cast<double>(static_cast<std::int64_t>(rng.below(20001)) - 10000);
        xr[i] = rng.gaussian();
      }
      auto yi = xi, yr = xr;
      fwht_inplace(yi);
      fwht_inplace(yr);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double ri = 0.0, rr = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          ri += h[i][j] * xi[j];
          rr += h[i][j] * xr[j];
        }
        exact = exact && ri == yi[i];
        num += (rr - yr[i]) * (rr - yr[i]);
        den += rr * rr;
      }
      worst_rel = std::max(worst_rel, std::sqrt(num / den));
    }
  }
  const double t1024 = time_fwht(1024);

  // Log-log slope of time against d over a doubling ladder.
  std::vector<double> lx, ly;
  for (std::size_t d = 256; d <= (std::size_t{1} << 18); d *= 2) {
    lx.push_back(std::log(static_cast<double>(d)));
    ly.push_back(std::log(time_fwht(d)));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  return {exact && worst_rel <= 1e-12 && t1024 < 1e-3 && slope <= 1.3,
          fmt("integer exact=%s, worst real rel err=%.2e (<=1e-12), t(1024)=%.1f us (<1000), slope=%.3f (<=1.3)",
              exact ? "yes" : "no", worst_rel, t1024 * 1e6, slope)};
}

// ------------------------------------------------------------------ 2

Outcome criterion_sketch_identities() {
  SplitMix64 rng(202);
  double worst_adj = 0.0, worst_cons = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 2 + rng.below(19);
    const std::size_t m = 1 + rng.below(4 * d);
    const auto kind = trial % 2 ? OperatorKind::Dense : OperatorKind::Structured;
    const auto dist = (trial / 2) % 2 ? Distribution::UniformSphere : Distribution::Gaussian;
    const auto op = SketchOperator::build(kind, d, m, rng.next(), dist);
    const auto M = oracle::random_symmetric(d, rng);
    std::vector<double> y(op.m());
    for (double& v : y) v = rng.gaussian();

    double lhs = 0.0;
    const auto am = op.apply(M);
    for (std::size_t j = 0; j < y.size(); ++j) lhs += am[j] * y[j];
    const double rhs = inner(M, op.adjoint(y));
    double ny = 0.0;
    for (double v : y) ny += v * v;
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / (fro_norm(M) * std::sqrt(ny)));

    std::vector<double> x(d);
    for (double& v : x) v = rng.gaussian();
    std::vector<double> xx(d * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) xx[i * d + j] = x[i] * x[j];
    const auto via_matrix = op.apply(SymmetricMatrix(d, std::move(xx)));
    const auto via_features = op.features(x);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < via_features.size(); ++j) {
      num += std::pow(via_matrix[j] - via_features[j], 2);
      den += via_features[j] * via_features[j];
    }
    worst_cons = std::max(worst_cons, std::sqrt(num / den));
  }
  return {worst_adj <= 1e-9 && worst_cons <= 1e-9,
          fmt("1000 trials: worst adjoint gap %.2e, worst A(xx^T) vs Phi(x) gap %.2e (both <=1e-9, relative)",
              worst_adj, worst_cons)};
}

// ------------------------------------------------------------------ 3

Outcome criterion_glasso_kkt() {
  SplitMix64 rng(303);
  const std::size_t dims[] = {5, 10, 25};
  double worst = 0.0;
  int solves = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = dims[trial % 3];
    const auto z = oracle::random_spd(d, rng, 0.1 + rng.uniform());
    for (double lambda : {1e-3, 1e-2, 1e-1}) {
      const auto est = glasso(z, {lambda});
      worst = std::max(worst, kkt_residual(z, est.covariance, est.precision, lambda));
      ++solves;
    }
  }
  // 2x2: W_12 is Z_12 soft-thresholded by lambda.
  double worst_closed = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const double z11 = rng.uniform(0.5, 3.0), z22 = rng.uniform(0.5, 3.0);
    const double z12 = rng.uniform(-0.9, 0.9) * std::sqrt(z11 * z22);
    const double lambda = rng.uniform(0.0, 0.5);
    const auto est = glasso(SymmetricMatrix(2, std::vector<double>{z11, z12, z12, z22}), {lambda, 1e-12});
    const double w12 = std::copysign(std::max(std::abs(z12) - lambda, 0.0), z12);
    const double det = z11 * z22 - w12 * w12;
    worst_closed = std::max({worst_closed, std::abs(est.covariance(0, 1) - w12),
                             std::abs(est.precision(0, 0) - z22 / det), std::abs(est.precision(0, 1) + w12 / det)});
  }
  return {worst <= 1e-4 && worst_closed <= 1e-8,
          fmt("%d solves: worst KKT residual %.2e (<=1e-4); 2x2 closed form worst gap %.2e (<=1e-8)", solves, worst,
              worst_closed)};
}

// ------------------------------------------------------------------ 4

// Reference RE from the first validated run; see README.
constexpr double kFigure2ReferenceRe = 0.0;

Outcome criterion_figure2() {
  const auto t0 = Clock::now();
  GeneratorSpec g;
  g.d = 64;
  g.num_blocks = 8;
  g.p = 0.2;
  g.seed = 1;
  const auto gt = generate(g);
  const auto op = SketchOperator::build(OperatorKind::Structured, 64, 1536, 3);
  SketchAccumulator acc(op);
  GaussianSampler sampler(gt.sigma, 2);
  std::vector<double> x(64);
  for (int i = 0; i < 8000; ++i) {
    sampler.next(x);
    acc.add(x);
  }
  // A run over budget stops at the budget instead of finishing late.
  constexpr int kTMax = 3500;
  constexpr double kBudget = 900.0;
  DecoderConfig cfg;
  cfg.lambda = 0.008;
  cfg.gamma = 0.005;
  cfg.t_max = kTMax;
  cfg.on_iteration = [&](int, const SymmetricMatrix&) { return seconds_since(t0) <= kBudget; };
  double re = NAN, f1 = 0.0;
  int rescues = 0, done = 0;
  std::string error;
  try {
    const auto r = decode(op, acc.result(), cfg);
    done = r.iterations;
    rescues = r.spd_violations;
    re = relative_error(gt.theta, r.estimate.precision);
    f1 = f1_support(gt.theta, r.estimate.precision).f1;
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double secs = seconds_since(t0);
  const bool re_ok = std::isfinite(re) && (kFigure2ReferenceRe <= 0.0 || std::abs(re - kFigure2ReferenceRe) <= 0.2 * kFigure2ReferenceRe);
  return {re_ok && f1 >= 0.6 && done == kTMax && secs <= kBudget,
          fmt("RE=%.4f (finite, ref %.4f +-20%%), F1=%.3f (>=0.6), rescues=%d, %d/%d iterations in %.0f s (<=%.0f)%s%s",
              re, kFigure2ReferenceRe, f1, rescues, done, kTMax, secs, kBudget, error.empty() ? "" : ", error: ",
              error.c_str())};
}

// ------------------------------------------------------------------ 5

struct BudgetedDecode {
  double re = NAN;
  double f1 = 0.0;
};

// Returns nullopt if the deadline passed before t_max iterations.
std::optional<BudgetedDecode> decode_until(const SketchOperator& op, const Sketch& s, const GroundTruth& gt,
                                           double lambda, int t_max, Clock::time_point deadline) {
  DecoderConfig cfg;
  cfg.lambda = lambda;
  cfg.gamma = LipschitzStep{};
  cfg.t_max = t_max;
  cfg.on_iteration = [&](int, const SymmetricMatrix&) { return Clock::now() <= deadline; };
  const auto r = decode(op, s, cfg);
  if (r.iterations < t_max) return std::nullopt;
  return BudgetedDecode{relative_error(gt.theta, r.estimate.precision), f1_support(gt.theta, r.estimate.precision).f1};
}

Outcome criterion_figure3() {
  constexpr std::size_t d = 128;
  constexpr int kSeeds = 3, kTMax = 3000;
  constexpr double kBudget = 1800.0;
  const auto t0 = Clock::now();
  const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(kBudget));
  const auto ladder = default_lambda_grid();

  // Best RE over the ladder and its F1, per seed, at the low and the full m.
  std::vector<double> low_re, low_f1, full_re;
  std::size_t m_low_max = 0;
  int decodes = 0, failures = 0;
  const int total = kSeeds * 2 * static_cast<int>(ladder.size());
  for (int seed = 1; seed <= kSeeds; ++seed) {
    GeneratorSpec g;
    g.d = d;
    g.num_blocks = 16;
    g.p = 0.2;
    g.seed = static_cast<std::uint64_t>(seed);
    const auto gt = generate(g);
    const std::size_t nnz = d + 2 * gt.support.size();
    const auto m_low = static_cast<std::size_t>(std::ceil(static_cast<double>(nnz) * std::log(static_cast<double>(d))));
    m_low_max = std::max(m_low_max, m_low);
    for (const std::size_t m : {m_low, d * d / 2}) {
      const auto op = SketchOperator::build(OperatorKind::Structured, d, m, 3);
      const auto s = sketch_covariance(op, gt.sigma);
      double best_re = INFINITY, best_f1 = 0.0;
      // Largest lambda first: those decodes are the cheapest.
      for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
        std::optional<BudgetedDecode> r;
        try {
          r = decode_until(op, s, gt, *it, kTMax, deadline);
        } catch (const std::exception&) {
          ++failures;
          ++decodes;
          continue;
        }
        if (!r) {
          return {false, fmt("runtime budget of %.0f s exhausted after %d of %d decodes (%d failed); cell in "
                             "progress (seed %d, m=%zu) has best RE %.4f, F1 %.3f",
                             kBudget, decodes, total, failures, seed, m, best_re, best_f1)};
        }
        ++decodes;
        if (r->re < best_re) {
          best_re = r->re;
          best_f1 = r->f1;
        }
      }
      if (m == d * d / 2) {
        full_re.push_back(best_re);
      } else {
        low_re.push_back(best_re);
        low_f1.push_back(best_f1);
      }
    }
  }
  const double re_low = median(low_re), f1_low = median(low_f1), re_full = median(full_re);
  const double secs = seconds_since(t0);
  return {re_low <= 0.15 && f1_low >= 0.8 && re_full <= 0.05 && secs <= kBudget,
          fmt("m>=%zu: median best RE=%.4f (<=0.15), F1=%.3f (>=0.8); m=%zu: median best RE=%.4f (<=0.05); "
              "%d failed decodes; %.0f s (<=%.0f)",
              m_low_max, re_low, f1_low, d * d / 2, re_full, failures, secs, kBudget)};
}

// ------------------------------------------------------------------ 6

Outcome criterion_figure4() {
  constexpr std::size_t d = 32;
  ExperimentConfig cfg;
  cfg.generator.d = d;
  cfg.generator.num_blocks = 4;
  cfg.generator.p = 0.2;
  cfg.n_grid = {d / 2, 1000, 10000};
  cfg.m_grid = {d * (d + 1) / 2};
  cfg.op_kind = OperatorKind::Dense;
  cfg.t_max = 1000;
  cfg.repeats = 3;
  cfg.baseline_glasso = true;
  cfg.baseline_pinv = true;
  const auto t0 = Clock::now();
  const auto rows = run_grid(cfg);
  const auto best = best_lambda(rows);

  auto best_re = [&](Method method, std::uint64_t n) {
    for (const auto& b : best) {
      if (b.method == method && b.n == n && b.metric == "re") return b.mean;
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  // Per-repeat F1 of a method at its best-F1 lambda (pinv has a single lambda-free row per repeat).
  auto f1_median = [&](Method method, std::uint64_t n) {
    double lambda = 0.0;
    bool found = method == Method::Pinv;
    for (const auto& b : best) {
      if (b.method == method && b.n == n && b.metric == "f1") {
        lambda = b.lambda;
        found = true;
      }
    }
    std::vector<double> f1;
    for (const auto& r : rows) {
      if (found && r.method == method && r.n == n && !r.failed && (method == Method::Pinv || r.lambda == lambda)) {
        f1.push_back(r.f1);
      }
    }
    return f1.empty() ? std::numeric_limits<double>::quiet_NaN() : median(f1);
  };

  bool pass = true;
  std::string detail;
  for (const std::uint64_t n : {1000, 10000}) {
    const double dec = best_re(Method::Decode, n), gl = best_re(Method::GlassoFull, n);
    const bool ok = std::abs(dec - gl) <= 0.05;
    pass = pass && ok;
    detail += fmt("n=%llu: RE decode %.4f vs glasso %.4f (|diff|<=0.05); ", static_cast<unsigned long long>(n), dec, gl);
  }
  const double f1_dec = f1_median(Method::Decode, d / 2), f1_pinv = f1_median(Method::Pinv, d / 2);
  pass = pass && f1_dec > f1_pinv;
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.failed; });
  detail += fmt("n=%zu: median F1 decode %.3f vs pinv %.3f (>); %td failed cells; %.0f s", d / 2, f1_dec, f1_pinv,
                failed, seconds_since(t0));
  return {pass, detail};
}

// ------------------------------------------------------------------ 7

Outcome criterion_safe_step() {
  int rescues = 0, instances = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorSpec g;
    g.d = 32;
    g.num_blocks = 4;
    g.seed = seed;
    const auto gt = generate(g);
    const auto op = SketchOperator::build(OperatorKind::Structured, 32, 512, 1000 + seed);
    const auto s = sketch_stream(op, sample_gaussian(gt, 2000, 2000 + seed));
    DecoderConfig cfg;
    cfg.lambda = 0.01;
    cfg.t_max = 100;
    rescues += decode(op, s, cfg).spd_violations;
    ++instances;
  }

  // Unbounded exactly when lambda_max(Sigma_t) < lam_min_hat.
  SplitMix64 rng(707);
  int mismatches = 0, checks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3 + rng.below(10);
    const auto op = SketchOperator::build(trial % 2 ? OperatorKind::Dense : OperatorKind::Structured, d, 4 * d,
                                          rng.next());
    const auto sigma = oracle::random_spd(d, rng);
    const double top = max_eigenvalue(sigma);
    for (double lam : {0.0, 0.5 * top, top * (1 - 1e-9), top * (1 + 1e-9), 2 * top}) {
      const bool expected = top < lam;
      mismatches += safe_step(op, sigma, lam).unbounded != expected;
      ++checks;
    }
  }
  return {rescues == 0 && mismatches == 0,
          fmt("%d SPD rescues over %d SafeAuto decodes (==0); unbounded-branch mismatches %d/%d (==0)", rescues,
              instances, mismatches, checks)};
}

// ------------------------------------------------------------------ 8

Outcome criterion_sandwich() {
  SplitMix64 rng(808);
  int violations = 0;
  double tightest = 1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + rng.below(31);
    const auto M = oracle::random_symmetric(d, rng);
    const auto dist = trial % 2 ? Distribution::UniformSphere : Distribution::Gaussian;
    const auto est = lambda_norm_estimate(M, dist, 20000, rng.next());
    const double fro = fro_norm(M);
    const double lo = 2.0 * fro / (9.0 * std::sqrt(15.0) * static_cast<double>(d));
    const double hi = fro / std::sqrt(static_cast<double>(d));
    const double slack = 3.0 * est.std_error;
    if (est.mean < lo - slack || est.mean > hi + slack) ++violations;
    tightest = std::min({tightest, (est.mean - lo) / fro, (hi - est.mean) / fro});
  }
  return {violations == 0,
          fmt("50 matrices: %d outside [2|M|/(9 sqrt15 d), |M|/sqrt d] +- 3 SE; closest margin %.3g |M|_F", violations,
              tightest)};
}

// ------------------------------------------------------------------ 9

Outcome criterion_rip_trend() {
  RipProbeConfig cfg;
  cfg.d = 32;
  cfg.k = 32;
  cfg.m_grid = {256, 1024};
  cfg.n_pairs = 50;
  cfg.n_mc = 200000;
  const auto rows = rip_probe(cfg);
  const double ratio = rows[1].median / rows[0].median;
  return {ratio <= 0.6, fmt("median secant deviation %.4f at m=256, %.4f at m=1024, ratio %.3f (<=0.6)",
                            rows[0].median, rows[1].median, ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"FWHT oracle equivalence and scaling", criterion_fwht}},
      {2, {"sketch adjoint and consistency identities", criterion_sketch_identities}},
      {3, {"graphical lasso KKT and 2x2 closed form", criterion_glasso_kkt}},
      {4, {"d=64 finite-sample qualitative recovery", criterion_figure2}},
      {5, {"asymptotic recovery versus m at d=128", criterion_figure3}},
      {6, {"coherence with graphical lasso at full m", criterion_figure4}},
      {7, {"safe step size", criterion_safe_step}},
      {8, {"Lambda-norm sandwich", criterion_sandwich}},
      {9, {"RIP probe concentration trend", criterion_rip_trend}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 1;
    }
  }
  if (selected.empty())
    for (const auto& [id, c] : criteria) selected.push_back(id);

  int failures = 0;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 1;
    }
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = it->second.second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d [%s] %s: %s (%.1f s)\n", id, out.pass ? "PASS" : "FAIL", it->second.first,
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failures += !out.pass;
  }
  return failures == 0 ? 0 : 2;
}
