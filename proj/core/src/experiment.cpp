#include "sketchprec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "sketchprec/errors.hpp"
#include "sketchprec/metrics.hpp"

namespace sketchprec {

using nlohmann::json;

std::vector<double> default_lambda_grid() { return {1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1}; }

// ---------------------------------------------------------------- config

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw DataError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(where + "." + key + ": " + e.what());
  }
}

std::optional<std::uint64_t> parse_n(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinite") return std::nullopt;
    throw DataError("n: expected a positive integer or \"inf\", got \"" + s + "\"");
  }
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) throw DataError("n: expected a positive integer or \"inf\"");
  return v.get<std::uint64_t>();
}

StepSize parse_gamma(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "safe_auto") return SafeAutoStep{};
    if (s == "lipschitz") return LipschitzStep{};
    throw DataError("gamma: expected a positive number, \"safe_auto\" or \"lipschitz\"");
  }
  if (!v.is_number() || !(v.get<double>() > 0.0)) throw DataError("gamma: must be positive");
  return v.get<double>();
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw DataError("config must be a JSON object");
  reject_unknown(root,
                 {"generator", "n", "m_grid", "lambda_grid", "gamma", "t_max", "repeats", "seeds", "metrics",
                  "baselines", "operator"},
                 "config");

  ExperimentConfig cfg;
  if (!root.contains("generator")) throw DataError("config: missing \"generator\"");
  const json& gen = root.at("generator");
  if (!gen.is_object()) throw DataError("generator must be an object");
  reject_unknown(gen, {"kind", "d", "blocks", "p", "seed"}, "generator");
  const auto kind = parse_graph_kind(field<std::string>(gen, "kind", "generator"));
  if (!kind) throw DataError("generator.kind must be \"erdos\" or \"powerlaw\"");
  cfg.generator.kind = *kind;
  cfg.generator.d = field<std::size_t>(gen, "d", "generator");
  cfg.generator.num_blocks = gen.contains("blocks") ? field<std::size_t>(gen, "blocks", "generator") : 1;
  if (gen.contains("p")) cfg.generator.p = field<double>(gen, "p", "generator");
  if (gen.contains("seed")) throw DataError("generator.seed: use seeds.model instead");

  if (root.contains("n")) {
    const json& n = root.at("n");
    cfg.n_grid.clear();
    if (n.is_array()) {
      for (const auto& v : n) cfg.n_grid.push_back(parse_n(v));
    } else {
      cfg.n_grid.push_back(parse_n(n));
    }
  }
  if (root.contains("m_grid")) cfg.m_grid = field<std::vector<std::size_t>>(root, "m_grid", "config");
  if (root.contains("lambda_grid")) cfg.lambda_grid = field<std::vector<double>>(root, "lambda_grid", "config");
  if (root.contains("gamma")) cfg.gamma = parse_gamma(root.at("gamma"));
  if (root.contains("t_max")) cfg.t_max = field<int>(root, "t_max", "config");
  if (root.contains("repeats")) cfg.repeats = field<int>(root, "repeats", "config");

  if (root.contains("seeds")) {
    const json& s = root.at("seeds");
    if (!s.is_object()) throw DataError("seeds must be an object");
    reject_unknown(s, {"model", "data", "operator"}, "seeds");
    if (s.contains("model")) cfg.seeds.model = field<std::uint64_t>(s, "model", "seeds");
    if (s.contains("data")) cfg.seeds.data = field<std::uint64_t>(s, "data", "seeds");
    if (s.contains("operator")) cfg.seeds.op = field<std::uint64_t>(s, "operator", "seeds");
  }
  if (root.contains("metrics")) {
    const json& m = root.at("metrics");
    if (!m.is_object()) throw DataError("metrics must be an object");
    reject_unknown(m, {"re", "f1"}, "metrics");
    if (m.contains("re")) cfg.metric_re = field<bool>(m, "re", "metrics");
    if (m.contains("f1")) cfg.metric_f1 = field<bool>(m, "f1", "metrics");
  }
  if (root.contains("baselines")) {
    const json& b = root.at("baselines");
    if (!b.is_object()) throw DataError("baselines must be an object");
    reject_unknown(b, {"glasso_full", "pinv"}, "baselines");
    if (b.contains("glasso_full")) cfg.baseline_glasso = field<bool>(b, "glasso_full", "baselines");
    if (b.contains("pinv")) cfg.baseline_pinv = field<bool>(b, "pinv", "baselines");
  }
  if (root.contains("operator")) {
    const json& o = root.at("operator");
    if (!o.is_object()) throw DataError("operator must be an object");
    reject_unknown(o, {"kind", "dist"}, "operator");
    if (o.contains("kind")) {
      const auto k = field<std::string>(o, "kind", "operator");
      if (k == "dense") cfg.op_kind = OperatorKind::Dense;
      else if (k == "structured") cfg.op_kind = OperatorKind::Structured;
      else throw DataError("operator.kind must be \"dense\" or \"structured\"");
    }
    if (o.contains("dist")) {
      const auto k = field<std::string>(o, "dist", "operator");
      if (k == "gaussian") cfg.op_dist = Distribution::Gaussian;
      else if (k == "sphere") cfg.op_dist = Distribution::UniformSphere;
      else throw DataError("operator.dist must be \"gaussian\" or \"sphere\"");
    }
  }

  if (cfg.n_grid.empty()) throw DataError("n must not be empty");
  if (cfg.m_grid.empty() && !cfg.baseline_glasso && !cfg.baseline_pinv) throw DataError("m_grid must not be empty");
  if (cfg.lambda_grid.empty()) throw DataError("lambda_grid must not be empty");
  for (std::size_t m : cfg.m_grid)
    if (m == 0) throw DataError("m_grid entries must be positive");
  for (double l : cfg.lambda_grid)
    if (!(l >= 0.0) || !std::isfinite(l)) throw DataError("lambda_grid entries must be >= 0");
  if (cfg.t_max < 1) throw DataError("t_max must be >= 1");
  if (cfg.repeats < 1) throw DataError("repeats must be >= 1");
  if (cfg.generator.d == 0 || cfg.generator.num_blocks == 0 || cfg.generator.d % cfg.generator.num_blocks != 0) {
    throw DataError("generator.d must be a positive multiple of generator.blocks");
  }
  if (!(cfg.generator.p > 0.0 && cfg.generator.p < 1.0)) throw DataError("generator.p must lie in (0, 1)");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string gamma_to_string(const StepSize& gamma) {
  if (std::holds_alternative<SafeAutoStep>(gamma)) return "safe_auto";
  if (std::holds_alternative<LipschitzStep>(gamma)) return "lipschitz";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(gamma));
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------- grid

const char* to_string(Method method) noexcept {
  switch (method) {
    case Method::Decode: return "decode";
    case Method::GlassoFull: return "glasso";
    case Method::Pinv: return "pinv";
  }
  return "?";
}

namespace {

// nullopt (asymptotic) sorts after every finite n.
std::uint64_t n_key(const std::optional<std::uint64_t>& n) { return n ? *n : ~std::uint64_t{0}; }

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
}

/// Lazily built value shared between cells.
template <typename T>
struct Shared {
  std::once_flag once;
  std::exception_ptr error;
  std::optional<T> value;

  template <typename Build>
  const T& get(Build&& build) {
    std::call_once(once, [&] {
      try {
        value.emplace(build());
      } catch (...) {
        error = std::current_exception();
      }
    });
    if (error) std::rethrow_exception(error);
    return *value;
  }
};

struct SketchContext {
  SketchOperator op;
  Sketch sketch;
};

SymmetricMatrix stream_covariance(const GroundTruth& gt, std::uint64_t n, std::uint64_t seed) {
  const std::size_t d = gt.sigma.dim();
  GaussianSampler sampler(gt.sigma, seed);
  std::vector<double> x(d);
  std::vector<double> acc(d * d, 0.0);
  for (std::uint64_t r = 0; r < n; ++r) {
    sampler.next(x);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) acc[i * d + j] += x[i] * x[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      acc[i * d + j] *= inv;
      acc[j * d + i] = acc[i * d + j];
    }
  return SymmetricMatrix(d, std::move(acc));
}

void score(ResultRow& row, const GroundTruth& gt, const SymmetricMatrix& est) {
  row.re = relative_error(gt.theta, est);
  row.support = f1_support(gt.theta, est);
  row.f1 = row.support.f1;
  row.nnz_est = est.dim() + 2 * support_edges(est).size();
  if (!std::isfinite(row.re)) throw NumericalError("non-finite relative error");
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::make_tuple(static_cast<int>(a.method), n_key(a.n), a.m, a.lambda, a.repeat) <
         std::make_tuple(static_cast<int>(b.method), n_key(b.n), b.m, b.lambda, b.repeat);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SKETCHPREC_WORKERS"); env != nullptr && *env != '\0') {
    int value = 0;
    const auto [end, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), value);
    if (ec == std::errc() && *end == '\0' && value > 0) return value;
    throw DataError(std::string("SKETCHPREC_WORKERS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<ResultRow> run_grid(const ExperimentConfig& cfg, const GridOptions& options) {
  const int workers = resolve_workers(options.workers);
  const std::size_t reps = static_cast<std::size_t>(cfg.repeats);
  const std::size_t nn = cfg.n_grid.size();
  const std::size_t nm = cfg.m_grid.size();
  const std::size_t nl = cfg.lambda_grid.size();

  auto seeds_for = [&](std::size_t rep) {
    return SeedTriple{derive_seed(cfg.seeds.model, rep), derive_seed(cfg.seeds.data, rep),
                      derive_seed(cfg.seeds.op, rep)};
  };

  std::vector<Shared<GroundTruth>> truths(reps);
  std::vector<Shared<SymmetricMatrix>> covariances(reps * nn);
  std::vector<Shared<SketchContext>> sketches(reps * nn * nm);

  auto truth = [&](std::size_t rep) -> const GroundTruth& {
    return truths[rep].get([&] {
      GeneratorSpec spec = cfg.generator;
      spec.seed = seeds_for(rep).model;
      return generate(spec);
    });
  };
  auto covariance = [&](std::size_t rep, std::size_t ni) -> const SymmetricMatrix& {
    return covariances[rep * nn + ni].get([&] {
      const auto& gt = truth(rep);
      const auto& n = cfg.n_grid[ni];
      return n ? stream_covariance(gt, *n, seeds_for(rep).data) : gt.sigma;
    });
  };
  auto sketch_ctx = [&](std::size_t rep, std::size_t ni, std::size_t mi) -> const SketchContext& {
    return sketches[(rep * nn + ni) * nm + mi].get([&] {
      const auto& gt = truth(rep);
      const auto& n = cfg.n_grid[ni];
      auto op = SketchOperator::build(cfg.op_kind, cfg.generator.d, cfg.m_grid[mi], seeds_for(rep).op, cfg.op_dist);
      Sketch s;
      if (n) {
        SketchAccumulator acc(op);
        GaussianSampler sampler(gt.sigma, seeds_for(rep).data);
        std::vector<double> x(cfg.generator.d);
        for (std::uint64_t r = 0; r < *n; ++r) {
          sampler.next(x);
          acc.add(x);
        }
        s = acc.result();
      } else {
        s = sketch_covariance(op, gt.sigma);
      }
      return SketchContext{std::move(op), std::move(s)};
    });
  };

  struct Task {
    Method method;
    std::size_t rep, ni, mi, li;
  };
  std::vector<Task> tasks;
  for (std::size_t rep = 0; rep < reps; ++rep)
    for (std::size_t ni = 0; ni < nn; ++ni) {
      for (std::size_t mi = 0; mi < nm; ++mi)
        for (std::size_t li = 0; li < nl; ++li) tasks.push_back({Method::Decode, rep, ni, mi, li});
      if (cfg.baseline_glasso)
        for (std::size_t li = 0; li < nl; ++li) tasks.push_back({Method::GlassoFull, rep, ni, 0, li});
      if (cfg.baseline_pinv) tasks.push_back({Method::Pinv, rep, ni, 0, 0});
    }

  std::vector<ResultRow> rows(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t idx) {
    const Task& task = tasks[idx];
    ResultRow& row = rows[idx];
    row.method = task.method;
    row.generator = cfg.generator.kind;
    row.d = cfg.generator.d;
    row.blocks = cfg.generator.num_blocks;
    row.n = cfg.n_grid[task.ni];
    row.repeat = static_cast<int>(task.rep);
    row.seeds = seeds_for(task.rep);
    row.lambda = task.method == Method::Pinv ? 0.0 : cfg.lambda_grid[task.li];
    if (task.method == Method::Decode) {
      row.m = cfg.m_grid[task.mi];
      row.gamma = gamma_to_string(cfg.gamma);
      row.t_max = cfg.t_max;
    }
    try {
      const GroundTruth& gt = truth(task.rep);
      row.nnz_true = gt.nnz;
      const auto start = std::chrono::steady_clock::now();
      switch (task.method) {
        case Method::Decode: {
          const SketchContext& ctx = sketch_ctx(task.rep, task.ni, task.mi);
          row.m_eff = ctx.op.m();
          DecoderConfig dc;
          dc.lambda = row.lambda;
          dc.gamma = cfg.gamma;
          dc.t_max = cfg.t_max;
          const auto res = decode(ctx.op, ctx.sketch, dc);
          row.wall_ms = elapsed_ms(start);
          row.converged = res.estimate.converged;
          row.spd_violations = res.spd_violations;
          score(row, gt, res.estimate.precision);
          break;
        }
        case Method::GlassoFull: {
          const auto est = baseline_glasso(covariance(task.rep, task.ni), row.lambda);
          row.wall_ms = elapsed_ms(start);
          row.converged = est.converged;
          row.spd_violations = est.ridge_rescued ? 1 : 0;
          score(row, gt, est.precision);
          break;
        }
        case Method::Pinv: {
          const auto est = pinv(covariance(task.rep, task.ni));
          row.wall_ms = elapsed_ms(start);
          row.converged = true;
          score(row, gt, est);
          break;
        }
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      row.re = std::numeric_limits<double>::quiet_NaN();
      row.f1 = std::numeric_limits<double>::quiet_NaN();
    }
  });

  std::sort(rows.begin(), rows.end(), row_less);
  return rows;
}

std::vector<BestLambda> best_lambda(const std::vector<ResultRow>& rows, bool re, bool f1) {
  using Key = std::tuple<int, std::uint64_t, std::size_t>;
  struct Acc {
    std::optional<std::uint64_t> n;
    std::map<double, std::tuple<double, double, std::size_t>> per_lambda;  // sum re, sum f1, count
  };
  std::map<Key, Acc> groups;
  for (const auto& r : rows) {
    if (r.failed) continue;
    auto& g = groups[{static_cast<int>(r.method), n_key(r.n), r.m}];
    g.n = r.n;
    auto& [sre, sf1, cnt] = g.per_lambda[r.lambda];
    sre += r.re;
    sf1 += r.f1;
    ++cnt;
  }
  std::vector<BestLambda> out;
  for (const auto& [key, g] : groups) {
    auto pick = [&](const char* metric, bool lower_better) {
      BestLambda best{static_cast<Method>(std::get<0>(key)), g.n, std::get<2>(key), metric, 0.0, 0.0, 0};
      bool first = true;
      for (const auto& [lambda, acc] : g.per_lambda) {  // ascending lambda, so ">=" favours larger lambda
        const auto& [sre, sf1, cnt] = acc;
        const double mean = (lower_better ? sre : sf1) / static_cast<double>(cnt);
        const bool better = lower_better ? mean <= best.mean : mean >= best.mean;
        if (first || better) {
          best.lambda = lambda;
          best.mean = mean;
          best.count = cnt;
          first = false;
        }
      }
      out.push_back(best);
    };
    if (re) pick("re", true);
    if (f1) pick("f1", false);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_n(const std::optional<std::uint64_t>& n) { return n ? std::to_string(*n) : "inf"; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool with_re, bool with_f1) {
  out << "# sketchprec-results v1\n";
  out << "method,generator,d,blocks,n,m,m_eff,lambda,gamma,t_max,repeat,seed_model,seed_data,seed_op,"
         "re,f1,tp,fp,fn,nnz_true,nnz_est,wall_ms,converged,spd_violations,status\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << to_string(r.generator) << ',' << r.d << ',' << r.blocks << ','
        << fmt_n(r.n) << ',' << r.m << ',' << r.m_eff << ',' << fmt(r.lambda) << ',' << r.gamma << ','
        << r.t_max << ',' << r.repeat << ',' << r.seeds.model << ',' << r.seeds.data << ',' << r.seeds.op << ','
        << (with_re ? fmt(r.re) : "") << ',' << (with_f1 ? fmt(r.f1) : "") << ',' << r.support.tp << ','
        << r.support.fp << ',' << r.support.fn << ',' << r.nnz_true << ',' << r.nnz_est << ',' << r.wall_ms << ','
        << (r.converged ? 1 : 0) << ',' << r.spd_violations << ','
        << (r.failed ? csv_escape("failed: " + r.error) : "ok") << '\n';
  }
}

void write_best_csv(std::ostream& out, const std::vector<BestLambda>& best) {
  out << "# sketchprec-best-lambda v1\n";
  out << "method,n,m,metric,lambda,mean,count\n";
  for (const auto& b : best) {
    out << to_string(b.method) << ',' << fmt_n(b.n) << ',' << b.m << ',' << b.metric << ',' << fmt(b.lambda) << ','
        << fmt(b.mean) << ',' << b.count << '\n';
  }
}

// ---------------------------------------------------------------- baselines

PrecisionEstimate baseline_glasso(const SymmetricMatrix& sigma_hat, double lambda, const GlassoParams& params) {
  GlassoParams p = params;
  p.lambda = lambda;
  return glasso(sigma_hat, p);
}

PrecisionEstimate baseline_glasso(const Matrix& data, double lambda, const GlassoParams& params) {
  return baseline_glasso(empirical_covariance(data), lambda, params);
}

SymmetricMatrix baseline_pinv(const Matrix& data) { return pinv(empirical_covariance(data)); }

// ---------------------------------------------------------------- RIP probe

namespace {

/// Covariance whose inverse has at most k edges and spectrum in [a, b].
SymmetricMatrix sample_model_covariance(const RipProbeConfig& cfg, std::uint64_t seed) {
  const double pairs = static_cast<double>(cfg.d * (cfg.d - 1) / 2);
  GeneratorSpec spec;
  spec.kind = GraphKind::Erdos;
  spec.d = cfg.d;
  spec.num_blocks = 1;
  spec.p = std::clamp(static_cast<double>(cfg.k) / std::max(1.0, pairs), 1e-9, 1.0 - 1e-9);
  for (std::uint64_t attempt = 0;; ++attempt) {
    spec.seed = derive_seed(seed, attempt);
    GroundTruth gt = generate(spec);
    if (gt.support.size() > cfg.k) continue;  // rejection step
    const auto eig = eig_sym(gt.theta);
    const double lo = eig.eigenvalues.front();
    const double hi = eig.eigenvalues.back();
    // Affine spectral map keeps the support: alpha * Theta + beta * I.
    const double alpha = hi > lo ? (cfg.b - cfg.a) / (hi - lo) : 0.0;
    const double beta = hi > lo ? cfg.a - alpha * lo : 0.5 * (cfg.a + cfg.b);
    std::vector<double> mapped(eig.eigenvalues.size());
    for (std::size_t i = 0; i < mapped.size(); ++i) mapped[i] = 1.0 / (alpha * eig.eigenvalues[i] + beta);
    return eig.reconstruct(mapped);
  }
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<RipProbeRow> rip_probe(const RipProbeConfig& cfg, int workers) {
  if (cfg.d < 2 || cfg.m_grid.empty() || cfg.n_pairs == 0 || cfg.n_mc == 0 || !(cfg.a > 0.0) || !(cfg.a <= cfg.b)) {
    throw std::invalid_argument("rip_probe: invalid parameters");
  }
  for (std::size_t m : cfg.m_grid)
    if (m == 0) throw std::invalid_argument("rip_probe: m must be positive");
  const Distribution norm_dist = cfg.kind == OperatorKind::Dense ? cfg.dist : Distribution::UniformSphere;

  // Secant directions U = (S1 - S2) / ||S1 - S2||_Lambda.
  std::vector<SymmetricMatrix> secants(cfg.n_pairs, SymmetricMatrix(cfg.d));
  parallel_for(cfg.n_pairs, resolve_workers(workers), [&](std::size_t p) {
    const std::uint64_t base = derive_seed(cfg.seed, p);
    for (std::uint64_t attempt = 0;; ++attempt) {
      const auto s1 = sample_model_covariance(cfg, derive_seed(base, 4 * attempt));
      const auto s2 = sample_model_covariance(cfg, derive_seed(base, 4 * attempt + 1));
      const SymmetricMatrix diff = s1 - s2;
      if (fro_norm(diff) <= 1e-12 * std::max(1.0, fro_norm(s1))) continue;  // degenerate pair
      const double norm = lambda_norm_mc(diff, norm_dist, cfg.n_mc, derive_seed(base, 4 * attempt + 2));
      if (!(norm > 0.0)) continue;
      secants[p] = diff * (1.0 / norm);
      return;
    }
  });

  std::vector<RipProbeRow> rows(cfg.m_grid.size());
  for (std::size_t mi = 0; mi < cfg.m_grid.size(); ++mi) {
    RipProbeRow& row = rows[mi];
    row.m = cfg.m_grid[mi];
    row.deviations.assign(cfg.n_pairs, 0.0);
    std::vector<std::size_t> m_eff(cfg.n_pairs, 0);
    parallel_for(cfg.n_pairs, resolve_workers(workers), [&](std::size_t p) {
      const auto op = SketchOperator::build(cfg.kind, cfg.d, row.m, derive_seed(derive_seed(cfg.seed, p), 1000 + mi),
                                            cfg.dist);
      const auto y = op.apply(secants[p]);
      double l1 = 0.0;
      for (double v : y) l1 += std::abs(v);
      row.deviations[p] = std::abs(l1 - 1.0);
      m_eff[p] = op.m();
    });
    row.m_eff = m_eff.front();
    row.median = quantile(row.deviations, 0.5);
    row.q10 = quantile(row.deviations, 0.1);
    row.q90 = quantile(row.deviations, 0.9);
    row.max = *std::max_element(row.deviations.begin(), row.deviations.end());
    double sum = 0.0;
    for (double v : row.deviations) sum += v;
    row.mean = sum / static_cast<double>(row.deviations.size());
  }
  return rows;
}

void write_rip_csv(std::ostream& out, const std::vector<RipProbeRow>& rows) {
  out << "# sketchprec-ripprobe v1\n";
  out << "m,m_eff,pairs,median,q10,q90,max,mean\n";
  for (const auto& r : rows) {
    out << r.m << ',' << r.m_eff << ',' << r.deviations.size() << ',' << fmt(r.median) << ',' << fmt(r.q10) << ','
        << fmt(r.q90) << ',' << fmt(r.max) << ',' << fmt(r.mean) << '\n';
  }
}

}  // namespace sketchprec
