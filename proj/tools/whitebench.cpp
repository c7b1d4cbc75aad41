// whitebench command-line front end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "whitebench/data_model.hpp"
#include "whitebench/errors.hpp"
#include "whitebench/harness/experiment.hpp"
#include "whitebench/harness/io.hpp"
#include "whitebench/harness/plot.hpp"
#include "whitebench/harness/verify.hpp"
#include "whitebench/info_props.hpp"
#include "whitebench/whitening.hpp"

namespace {

using namespace wb;

struct WhitenArgs {
  std::string input;
  std::string mode = "pca";
  std::string scope = "train";
  std::string rank_policy = "jitter";
  std::string output;
  double epsilon = 0.0;
  bool center = false;
  std::string fit_data;
  std::vector<std::string> also;
  std::vector<std::string> also_output;
};

int run_whiten(const WhitenArgs& a) {
  const FitScope scope = parse_fit_scope(a.scope);
  WhitenOptions opt;
  opt.mode = parse_whiten_mode(a.mode);
  opt.scope = scope;
  opt.center = a.center;
  opt.policy = parse_rank_policy(a.rank_policy) == RankPolicy::Kind::manual_rank_control ? RankPolicy::manual()
                                                                                           : RankPolicy::jitter(a.epsilon);
  if (a.also.size() != a.also_output.size()) throw InputError("--also and --also-output must pair up");
  if (scope != FitScope::full && !a.also.empty()) throw InputError("--also is only meaningful with --scope full");
  if (scope == FitScope::distribution && a.fit_data.empty()) {
    throw InputError("--scope distribution needs --fit-data with a draw from the data distribution");
  }
  if (scope != FitScope::distribution && !a.fit_data.empty()) throw InputError("--fit-data requires --scope distribution");

  const io::Ingested in = io::ingest(a.input, Split::train);
  std::vector<io::Ingested> extra;
  for (const auto& p : a.also) extra.push_back(io::ingest(p, Split::test));

  Matrix fit;
  if (scope == FitScope::distribution) {
    fit = io::ingest(a.fit_data, Split::combined).x.values();
  } else {
    Eigen::Index cols = in.x.sample_count();
    for (const auto& e : extra) cols += e.x.sample_count();
    fit.resize(in.x.feature_dim(), cols);
    fit.leftCols(in.x.sample_count()) = in.x.values();
    Eigen::Index at = in.x.sample_count();
    for (const auto& e : extra) {
      if (e.x.feature_dim() != in.x.feature_dim()) throw ShapeError(e.x.feature_dim() == 0 ? "empty --also file" : "--also dimension mismatch");
      fit.middleCols(at, e.x.sample_count()) = e.x.values();
      at += e.x.sample_count();
    }
  }
  const Whitener w = fit_whitener(Dataset(fit, Split::combined), opt);
  const Dataset out = apply(w, in.x);
  io::export_dataset(out, in.y ? &*in.y : nullptr, a.output);
  for (std::size_t i = 0; i < extra.size(); ++i) {
    io::export_dataset(apply(w, extra[i].x), extra[i].y ? &*extra[i].y : nullptr, a.also_output[i]);
  }
  std::printf("whitened %ld samples (d=%ld, %s, %s scope)\n", static_cast<long>(out.sample_count()),
              static_cast<long>(out.feature_dim()), to_string(opt.mode), to_string(scope));
  return 0;
}

int run_second_moments(const std::string& input, const std::string& which, const std::string& test,
                       const std::string& output) {
  const Dataset x = io::ingest(input, Split::train).x;
  Matrix m;
  if (which == "f") {
    m = compute_F(x);
  } else if (which == "k") {
    m = compute_K(x);
  } else if (which == "mixed") {
    if (test.empty()) throw InputError("--which mixed needs --test");
    m = compute_mixed_K(x, io::ingest(test, Split::test).x);
  } else {
    throw InputError("--which must be f, k or mixed");
  }
  io::write_matrix(m, output);
  std::printf("%s: %ld x %ld\n", which.c_str(), static_cast<long>(m.rows()), static_cast<long>(m.cols()));
  return 0;
}

int run_training(const std::string& config, const std::string& output_override, int workers, int expect) {
  RunConfig cfg = RunConfig::from_file(config);
  if (!output_override.empty()) cfg.output = output_override;
  if (expect == 1 && cfg.kind == ExperimentKind::mlp) {
    throw ConfigError("train-linear needs [experiment] kind = linear_flow or newton_flow");
  }
  if (expect == 2 && cfg.kind != ExperimentKind::mlp) throw ConfigError("train-mlp needs [experiment] kind = mlp");
  const std::vector<ResultRow> rows = sweep(cfg, workers);
  write_results(rows, cfg.output);
  long terminal = 0;
  long errors = 0;
  for (const ResultRow& r : rows) {
    terminal += r.terminal() ? 1 : 0;
    errors += r.stopping_reason == "error" ? 1 : 0;
  }
  std::printf("%s: %ld rows (%ld terminal, %ld errors), seed %llu -> %s\n", cfg.experiment_id.c_str(),
              static_cast<long>(rows.size()), terminal, errors, static_cast<unsigned long long>(cfg.master_seed),
              cfg.output.c_str());
  return 0;
}

int run_compress(const std::string& input, const std::string& output) {
  const Dataset x = io::ingest(input, Split::train).x;
  const CompressedDataset c = compress_whitened(x);
  write_compressed(c, output);
  std::printf("stored %ld of %ld scalars (d=%ld, n=%ld)\n", static_cast<long>(c.stored_scalars()),
              static_cast<long>(c.d * c.n), static_cast<long>(c.d), static_cast<long>(c.n));
  return 0;
}

int run_reconstruct(const std::string& input, const std::string& output) {
  const Matrix k = reconstruct_K(read_compressed(input));
  io::write_matrix(k, output);
  std::printf("K: %ld x %ld\n", static_cast<long>(k.rows()), static_cast<long>(k.cols()));
  return 0;
}

int run_verify_cmd(const std::string& suite, const std::string& report_path, std::uint64_t seed) {
  const VerifyReport rep = run_verify(parse_verify_suite(suite), seed);
  const std::string json = rep.to_json();
  if (report_path.empty()) {
    std::cout << json;
  } else {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw InputError("cannot open " + report_path + " for writing");
    out << json;
  }
  for (const VerifyCheck& c : rep.checks) {
    std::fprintf(stderr, "%s %s/%s value=%.3g threshold=%.3g\n", c.pass ? "ok  " : "FAIL", c.suite.c_str(),
                 c.name.c_str(), c.value, c.threshold);
  }
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whitening and second-order optimization test bench"};
  app.require_subcommand(1);

  WhitenArgs wa;
  auto* whiten = app.add_subcommand("whiten", "Fit a whitening transform and apply it");
  whiten->add_option("--input", wa.input, "Dataset to whiten (.csv or .wbds)")->required();
  whiten->add_option("--mode", wa.mode, "pca or zca")->check(CLI::IsMember({"pca", "zca"}));
  whiten->add_option("--scope", wa.scope, "train, full or distribution")
      ->check(CLI::IsMember({"train", "full", "distribution"}));
  whiten->add_option("--rank-policy", wa.rank_policy, "jitter or manual")->check(CLI::IsMember({"jitter", "manual"}));
  whiten->add_option("--output", wa.output, "Whitened dataset")->required();
  whiten->add_option("--epsilon", wa.epsilon, "Jitter; 0 picks 1e-8 times the mean eigenvalue");
  whiten->add_flag("--center", wa.center, "Subtract the fit mean first");
  whiten->add_option("--fit-data", wa.fit_data, "Distribution draw to fit on (scope distribution)");
  whiten->add_option("--also", wa.also, "Further splits fitted jointly and transformed (scope full)");
  whiten->add_option("--also-output", wa.also_output, "Outputs for --also, in order");

  std::string input;
  std::string output;
  std::string which;
  std::string test;
  auto* sm = app.add_subcommand("second-moments", "Write F = X X^T, K = X^T X or the test-by-train block");
  sm->add_option("--input", input)->required();
  sm->add_option("--which", which)->required()->check(CLI::IsMember({"f", "k", "mixed"}));
  sm->add_option("--test", test, "Test split for --which mixed");
  sm->add_option("--output", output)->required();

  std::string config;
  int workers = 1;
  auto* tl = app.add_subcommand("train-linear", "Gradient or Newton flow with early stopping");
  tl->add_option("--config", config)->required();
  tl->add_option("--output", output, "Overrides [experiment] output");
  auto* tm = app.add_subcommand("train-mlp", "SGD, Newton or regularized Gauss-Newton on an MLP");
  tm->add_option("--config", config)->required();
  tm->add_option("--output", output, "Overrides [experiment] output");
  auto* sw = app.add_subcommand("sweep", "Every size and seed of a config, in parallel");
  sw->add_option("--config", config)->required();
  sw->add_option("--workers", workers)->check(CLI::Range(1, 256));
  sw->add_option("--output", output, "Overrides [experiment] output");

  auto* comp = app.add_subcommand("compress", "Store a whitened dataset as its free block");
  comp->add_option("--input", input)->required();
  comp->add_option("--output", output)->required();
  auto* rec = app.add_subcommand("reconstruct-k", "Rebuild K from a compressed dataset");
  rec->add_option("--input", input)->required();
  rec->add_option("--output", output)->required();

  double cutoff = kRankCutoffRatio;
  auto* rank = app.add_subcommand("rank", "Numerical rank of F");
  rank->add_option("--input", input)->required();
  rank->add_option("--cutoff-ratio", cutoff)->check(CLI::PositiveNumber);

  std::string suite = "all";
  std::string report;
  std::uint64_t seed = 2024;
  auto* ver = app.add_subcommand("verify", "Run the property battery; exit 0 iff every check passes");
  ver->add_option("--suite", suite)
      ->check(CLI::IsMember({"orbit", "compression", "newton-equivalence", "null-prediction", "all"}));
  ver->add_option("--report", report, "JSON report path; stdout when omitted");
  ver->add_option("--seed", seed);

  std::string results;
  std::string spec;
  auto* plot = app.add_subcommand("plot", "Render results as an SVG line chart");
  plot->add_option("--results", results)->required();
  plot->add_option("--spec", spec)->required();
  plot->add_option("--output", output)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*whiten) return run_whiten(wa);
    if (*sm) return run_second_moments(input, which, test, output);
    if (*tl) return run_training(config, output, 1, 1);
    if (*tm) return run_training(config, output, 1, 2);
    if (*sw) return run_training(config, output, workers, 0);
    if (*comp) return run_compress(input, output);
    if (*rec) return run_reconstruct(input, output);
    if (*rank) {
      std::printf("%d\n", estimate_input_rank(io::ingest(input, Split::train).x, cutoff));
      return 0;
    }
    if (*ver) return run_verify_cmd(suite, report, seed);
    if (*plot) {
      emit_plot(results, PlotSpec::from_file(spec), output);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected failure: %s\n", e.what());
    return 4;
  }
  return 0;
}
