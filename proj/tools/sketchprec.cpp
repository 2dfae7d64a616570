// sketchprec command-line tool.
//
//   gen       ground-truth precision/covariance pair (+ optional Gaussian samples)
//   sketch    one-pass sketch of CSV rows from a file or stdin, or of a covariance
//   decode    recover (Sigma, Theta) from a sketch
//   eval      relative error and support F1 of an estimate
//   bench     experiment grid from a JSON config -> results CSV
//   ripprobe  empirical secant-deviation probe
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sketchprec/decoder.hpp"
#include "sketchprec/errors.hpp"
#include "sketchprec/experiment.hpp"
#include "sketchprec/io.hpp"
#include "sketchprec/metrics.hpp"
#include "sketchprec/modelgen.hpp"
#include "sketchprec/sketch.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sketchprec;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// Bad flag values found after parsing; reported like parse errors.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

OperatorKind parse_op(const std::string& s) {
  if (s == "structured") return OperatorKind::Structured;
  if (s == "dense") return OperatorKind::Dense;
  throw UsageError("unknown operator kind '" + s + "' (structured|dense)");
}

Distribution parse_dist(const std::string& s) {
  if (s == "gaussian") return Distribution::Gaussian;
  if (s == "sphere") return Distribution::UniformSphere;
  throw UsageError("unknown distribution '" + s + "' (gaussian|sphere)");
}

StepSize parse_gamma(const std::string& s) {
  if (s == "safe_auto" || s == "safe") return SafeAutoStep{};
  if (s == "lipschitz") return LipschitzStep{};
  std::size_t used = 0;
  double g = 0.0;
  try {
    g = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(g > 0.0)) {
    throw UsageError("gamma must be a positive number, safe_auto or lipschitz");
  }
  return g;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  return out;
}

// --- gen ---------------------------------------------------------------------

struct GenArgs {
  std::string kind = "erdos";
  std::size_t d = 64;
  std::size_t blocks = 8;
  double p = 0.2;
  std::uint64_t seed = 1;
  std::size_t samples = 0;
  std::uint64_t data_seed = 2;
  std::string out = ".";
};

void run_gen(const GenArgs& a) {
  const auto kind = parse_graph_kind(a.kind);
  if (!kind) throw UsageError("unknown generator '" + a.kind + "' (erdos|powerlaw)");
  GeneratorSpec spec{*kind, a.d, a.blocks, a.p, a.seed};
  const GroundTruth gt = generate(spec);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_spmx(dir / "theta.spmx", gt.theta);
  write_spmx(dir / "sigma.spmx", gt.sigma);
  json support = json::array();
  for (const auto& [i, j] : gt.support) support.push_back({i, j});
  json meta = {{"kind", to_string(spec.kind)}, {"d", spec.d},       {"L", spec.num_blocks}, {"p", spec.p},
               {"seed", spec.seed},            {"nnz", gt.nnz}, {"support", std::move(support)}};
  if (a.samples > 0) {
    // Rows are streamed so large sample files never sit in memory.
    GaussianSampler sampler(gt.sigma, a.data_seed);
    auto out = open_out(dir / "data.csv");
    std::vector<double> x(spec.d);
    Matrix row(1, spec.d);
    for (std::size_t i = 0; i < a.samples; ++i) {
      sampler.next(x);
      std::copy(x.begin(), x.end(), row.row(0).begin());
      write_csv_matrix(out, row);
    }
    meta["samples"] = a.samples;
    meta["data_seed"] = a.data_seed;
  }
  write_json(dir / "meta.json", meta);
}

// --- sketch ------------------------------------------------------------------

struct SketchArgs {
  std::string op = "structured";
  std::string dist = "gaussian";
  std::size_t m = 0;
  std::uint64_t seed = 3;
  std::string data;
  std::string sigma;
  std::string out = "sketch.skch";
};

Sketch sketch_rows(std::istream& in, const SketchArgs& a) {
  std::optional<SketchOperator> op;
  std::optional<SketchAccumulator> acc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::optional<std::vector<double>> row;
    try {
      row = parse_csv_row(line);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!row) continue;
    if (!op) {
      // The first row fixes d; the operator is built then.
      op.emplace(SketchOperator::build(parse_op(a.op), row->size(), a.m, a.seed, parse_dist(a.dist)));
      acc.emplace(*op);
    }
    if (row->size() != op->d_orig()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(op->d_orig()) +
                      " values, got " + std::to_string(row->size()));
    }
    acc->add(*row);
  }
  if (!acc || acc->count() == 0) throw DataError("no data rows");
  return acc->result();
}

void run_sketch(const SketchArgs& a) {
  if (a.m == 0) throw UsageError("--m must be positive");
  Sketch s;
  if (!a.sigma.empty()) {
    const SymmetricMatrix sigma = load_matrix(a.sigma);
    const auto op = SketchOperator::build(parse_op(a.op), sigma.dim(), a.m, a.seed, parse_dist(a.dist));
    s = sketch_covariance(op, sigma);
  } else if (a.data.empty() || a.data == "-") {
    s = sketch_rows(std::cin, a);
  } else {
    std::ifstream in(a.data);
    if (!in) throw DataError("cannot open " + a.data);
    s = sketch_rows(in, a);
  }
  write_skch(a.out, s);
  std::cerr << "sketched n=" << s.n << " d=" << s.d_orig << " m=" << s.m << " -> " << a.out << '\n';
}

// --- decode ------------------------------------------------------------------

struct DecodeArgs {
  std::string sketch;
  double lambda = 0.008;
  std::string gamma = "safe_auto";
  int t_max = 100;
  double lam_min_hat = 0.0;
  bool trace = false;
  std::string init;
  std::string out = ".";
};

void run_decode(const DecodeArgs& a) {
  const Sketch s = read_skch(fs::path(a.sketch));
  const auto& fp = s.fingerprint;
  const auto op = SketchOperator::build(fp.kind, s.d_orig, fp.m, fp.seed, fp.dist);

  DecoderConfig cfg;
  cfg.lambda = a.lambda;
  cfg.gamma = parse_gamma(a.gamma);
  cfg.t_max = a.t_max;
  cfg.lam_min_hat = a.lam_min_hat;
  cfg.record_trace = a.trace;
  if (!a.init.empty()) cfg.init = load_matrix(a.init);
  const DecodeResult r = decode(op, s, cfg);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_spmx(dir / "precision.spmx", r.estimate.precision);
  write_spmx(dir / "covariance.spmx", r.estimate.covariance);
  json side = {{"lambda", a.lambda},
               {"gamma", gamma_to_string(cfg.gamma)},
               {"gamma_used", r.gamma_used},
               {"t_max", a.t_max},
               {"iterations", r.iterations},
               {"spd_violations", r.spd_violations},
               {"seeds", {{"operator", fp.seed}}},
               {"operator", {{"kind", to_string(fp.kind)}, {"dist", to_string(fp.dist)}, {"m", fp.m}}},
               {"n", s.n}};
  if (a.trace) side["objective_trace"] = r.objective_trace;
  write_json(dir / "decode.json", side);
}

// --- eval --------------------------------------------------------------------

void run_eval(const std::string& truth, const std::string& estimate, double zero_tol) {
  const SymmetricMatrix t = load_matrix(truth);
  const SymmetricMatrix e = load_matrix(estimate);
  if (t.dim() != e.dim()) throw DataError("truth and estimate dimensions differ");
  const auto score = f1_support(t, e, zero_tol);
  json j = {{"re", relative_error(t, e)}, {"f1", score.f1}, {"tp", score.tp},
            {"fp", score.fp},             {"fn", score.fn}, {"d", t.dim()}};
  std::cout << j.dump() << '\n';
}

// --- bench -------------------------------------------------------------------

void run_bench(const std::string& config, const std::string& out, const std::string& best, int workers) {
  const ExperimentConfig cfg = load_config(config);
  const auto rows = run_grid(cfg, GridOptions{workers});
  {
    auto f = open_out(out);
    write_results_csv(f, rows, cfg.metric_re, cfg.metric_f1);
  }
  if (!best.empty()) {
    auto f = open_out(best);
    write_best_csv(f, best_lambda(rows, cfg.metric_re, cfg.metric_f1));
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.failed ? 1 : 0;
  std::cerr << rows.size() << " rows (" << failed << " failed) -> " << out << '\n';
}

// --- ripprobe ----------------------------------------------------------------

struct RipArgs {
  RipProbeConfig cfg;
  std::string op = "dense";
  std::string dist = "gaussian";
  std::string out = "ripprobe.csv";
  int workers = 0;
};

void run_ripprobe(RipArgs a) {
  a.cfg.kind = parse_op(a.op);
  a.cfg.dist = parse_dist(a.dist);
  const auto rows = rip_probe(a.cfg, a.workers);
  auto f = open_out(a.out);
  write_rip_csv(f, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketched sparse precision matrix recovery"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a ground-truth precision matrix");
  gen_cmd->add_option("--kind", gen.kind, "erdos | powerlaw")->capture_default_str();
  gen_cmd->add_option("--d", gen.d, "Dimension")->capture_default_str();
  gen_cmd->add_option("--blocks", gen.blocks, "Number of diagonal blocks")->capture_default_str();
  gen_cmd->add_option("--p", gen.p, "Erdos edge probability")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Model seed")->capture_default_str();
  gen_cmd->add_option("--samples", gen.samples, "Also write this many Gaussian samples to data.csv");
  gen_cmd->add_option("--data-seed", gen.data_seed, "Sample seed")->capture_default_str();
  gen_cmd->add_option("-o,--out", gen.out, "Output directory")->capture_default_str();

  SketchArgs sk;
  auto* sketch_cmd = app.add_subcommand("sketch", "Sketch CSV rows (file or stdin) or a covariance");
  sketch_cmd->add_option("--op", sk.op, "structured | dense")->capture_default_str();
  sketch_cmd->add_option("--dist", sk.dist, "gaussian | sphere")->capture_default_str();
  sketch_cmd->add_option("--m", sk.m, "Number of measurements")->required();
  sketch_cmd->add_option("--seed", sk.seed, "Operator seed")->capture_default_str();
  auto* data_opt = sketch_cmd->add_option("--data", sk.data, "CSV file of samples, '-' for stdin (default)");
  sketch_cmd->add_option("--sigma", sk.sigma, "Sketch this covariance (.spmx or CSV) instead of data")
      ->excludes(data_opt);
  sketch_cmd->add_option("-o,--out", sk.out, "Output .skch file")->capture_default_str();

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "Recover the precision matrix from a sketch");
  decode_cmd->add_option("--sketch", dec.sketch, "Input .skch file")->required();
  decode_cmd->add_option("--lambda", dec.lambda, "Sparsity penalty")->capture_default_str();
  decode_cmd->add_option("--gamma", dec.gamma, "Step size: number | safe_auto | lipschitz")
      ->capture_default_str();
  decode_cmd->add_option("--tmax", dec.t_max, "Iterations")->capture_default_str();
  decode_cmd->add_option("--lam-min-hat", dec.lam_min_hat, "Lower bound on lambda_min of the covariance");
  decode_cmd->add_option("--init", dec.init, "Initial covariance (.spmx or CSV)");
  decode_cmd->add_flag("--trace", dec.trace, "Record the objective trace in decode.json");
  decode_cmd->add_option("-o,--out", dec.out, "Output directory")->capture_default_str();

  std::string truth, estimate;
  double zero_tol = kZeroTol;
  auto* eval_cmd = app.add_subcommand("eval", "Score an estimate against the truth");
  eval_cmd->add_option("--truth", truth, "True precision (.spmx or CSV)")->required();
  eval_cmd->add_option("--estimate", estimate, "Estimated precision (.spmx or CSV)")->required();
  eval_cmd->add_option("--zero-tol", zero_tol, "Support threshold")->capture_default_str();

  std::string config, bench_out = "results.csv", best_out;
  int workers = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Run an experiment grid");
  bench_cmd->add_option("--config", config, "JSON experiment config")->required();
  bench_cmd->add_option("-o,--out", bench_out, "Results CSV")->capture_default_str();
  bench_cmd->add_option("--best", best_out, "Best-lambda summary CSV");
  bench_cmd->add_option("--workers", workers, "Worker threads (default: SKETCHPREC_WORKERS or all cores)");

  RipArgs rip;
  auto* rip_cmd = app.add_subcommand("ripprobe", "Empirical secant deviations of the sketch");
  rip_cmd->add_option("--d", rip.cfg.d, "Dimension")->capture_default_str();
  rip_cmd->add_option("--k", rip.cfg.k, "Max edges per model")->capture_default_str();
  rip_cmd->add_option("--a", rip.cfg.a, "Spectrum lower end")->capture_default_str();
  rip_cmd->add_option("--b", rip.cfg.b, "Spectrum upper end")->capture_default_str();
  rip_cmd->add_option("--m", rip.cfg.m_grid, "Sketch sizes")->capture_default_str();
  rip_cmd->add_option("--pairs", rip.cfg.n_pairs, "Model pairs per sketch size")->capture_default_str();
  rip_cmd->add_option("--mc", rip.cfg.n_mc, "Monte-Carlo samples for the norm")->capture_default_str();
  rip_cmd->add_option("--op", rip.op, "dense | structured")->capture_default_str();
  rip_cmd->add_option("--dist", rip.dist, "gaussian | sphere")->capture_default_str();
  rip_cmd->add_option("--seed", rip.cfg.seed, "Base seed")->capture_default_str();
  rip_cmd->add_option("--workers", rip.workers, "Worker threads");
  rip_cmd->add_option("-o,--out", rip.out, "Output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) run_gen(gen);
    if (*sketch_cmd) run_sketch(sk);
    if (*decode_cmd) run_decode(dec);
    if (*eval_cmd) run_eval(truth, estimate, zero_tol);
    if (*bench_cmd) run_bench(config, bench_out, best_out, workers);
    if (*rip_cmd) run_ripprobe(rip);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
