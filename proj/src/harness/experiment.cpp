#include "whitebench/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>
#include <tuple>

#include "whitebench/errors.hpp"
#include "whitebench/harness/csv.hpp"
#include "whitebench/harness/io.hpp"
#include "whitebench/random.hpp"

namespace wb {

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::linear_flow: return "linear_flow";
    case ExperimentKind::newton_flow: return "newton_flow";
    case ExperimentKind::mlp: return "mlp";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "linear_flow" || s == "linear") return ExperimentKind::linear_flow;
  if (s == "newton_flow" || s == "newton") return ExperimentKind::newton_flow;
  if (s == "mlp") return ExperimentKind::mlp;
  throw ConfigError("unknown experiment kind \"" + s + "\" (linear_flow, newton_flow, mlp)");
}

std::string WhiteningArm::name() const {
  if (!enabled) return "none";
  switch (scope) {
    case FitScope::train_only: return "train";
    case FitScope::full: return "full";
    case FitScope::distribution: return "distribution";
  }
  return "?";
}

WhiteningArm WhiteningArm::parse(const std::string& s) {
  if (s == "none") return {};
  return {true, parse_fit_scope(s)};
}

void apply_seed_override(RunConfig& cfg) {
  const char* env = std::getenv("WHITEBENCH_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw ConfigError(std::string("WHITEBENCH_SEED is not an unsigned integer: \"") + env + "\"");
  }
  cfg.master_seed = v;
}

void RunConfig::validate() const {
  if (experiment_id.empty()) throw ConfigError("experiment id must not be empty");
  if (seeds < 1) throw ConfigError("seeds must be >= 1");
  if (sizes.empty()) throw ConfigError("at least one dataset size is required");
  for (long s : sizes) {
    if (s < 1) throw ConfigError("dataset sizes must be >= 1");
    if (convention == SizeConvention::joint && s < 3) throw ConfigError("joint dataset sizes must be >= 3");
  }
  if (arms.empty()) throw ConfigError("at least one whitening arm is required");
  if (data.holdout < 0) throw ConfigError("[data] holdout must be >= 0");
  if (data.holdout > 0 && convention != SizeConvention::joint) {
    throw ConfigError("[data] holdout only applies to the joint size convention");
  }
  if (!data.synthetic) {
    if (data.train_path.empty()) throw ConfigError("[data] train is required for file sources");
    if (convention == SizeConvention::joint) throw ConfigError("joint size convention needs synthetic data");
    if (data.holdout > 0) throw ConfigError("[data] holdout needs synthetic data");
    for (const auto& a : arms) {
      if (a.enabled && a.scope == FitScope::distribution && data.distribution_path.empty()) {
        throw ConfigError("distribution whitening of file data needs [data] distribution");
      }
    }
  } else {
    SyntheticSpec probe = data.spec;
    probe.n_train = 1;
    probe.n_val = std::max(1, probe.n_val);
    probe.n_test = std::max(1, probe.n_test);
    probe.validate();
  }
  if (kind != ExperimentKind::mlp) {
    const bool has_val = data.synthetic ? (convention == SizeConvention::joint || data.spec.n_val > 0)
                                        : !data.val_path.empty();
    if (!has_val) throw ConfigError("linear runs early-stop on a validation set; none is configured");
  }
  if (distribution_size < 1) throw ConfigError("distribution_size must be >= 1");
  if (grid.points < 2) throw ConfigError("grid_points must be >= 2");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  for (double l : lambdas)
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambdas must lie in [0, 1]");
  for (double e : etas)
    if (!(e > 0.0)) throw ConfigError("etas must be positive");
  if (!(cutoff > 0.0 && cutoff <= 1.0)) throw ConfigError("cutoff must lie in (0, 1]");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (!(init_variance >= 0.0)) throw ConfigError("init_variance must be >= 0");
  try {
    optimizer_config.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

RunConfig RunConfig::from_config(ConfigFile& c) {
  RunConfig r;
  r.experiment_id = c.get_or("experiment", "id", r.experiment_id);
  r.kind = parse_experiment_kind(c.get_or("experiment", "kind", to_string(r.kind)));
  r.master_seed = c.get_u64("experiment", "master_seed", 0);
  r.seeds = static_cast<int>(c.get_long("experiment", "seeds", 1));
  r.sizes = c.get_longs("experiment", "sizes");
  const std::string conv = c.get_or("experiment", "size_convention", "train");
  if (conv == "train") {
    r.convention = SizeConvention::train;
  } else if (conv == "joint") {
    r.convention = SizeConvention::joint;
  } else {
    throw ConfigError("size_convention must be train or joint");
  }
  r.trajectory = c.get_bool("experiment", "trajectory", false);
  r.output = c.get_or("experiment", "output", r.output);

  const std::string source = c.get_or("data", "source", "synthetic");
  if (source != "synthetic" && source != "file") throw ConfigError("[data] source must be synthetic or file");
  r.data.synthetic = source == "synthetic";
  SyntheticSpec& s = r.data.spec;
  s.d = static_cast<int>(c.get_long("data", "d", s.d));
  s.alpha = c.get_double("data", "alpha", s.alpha);
  const std::string spectrum = c.get_or("data", "spectrum", "power_law");
  if (spectrum == "power_law") {
    s.spectrum = SyntheticSpec::SpectrumKind::power_law;
  } else if (spectrum == "flat") {
    s.spectrum = SyntheticSpec::SpectrumKind::flat;
  } else if (spectrum == "custom") {
    s.spectrum = SyntheticSpec::SpectrumKind::custom;
  } else {
    throw ConfigError("[data] spectrum must be power_law, flat or custom");
  }
  s.custom = c.get_doubles("data", "custom");
  const std::string teacher = c.get_or("data", "teacher", "linear");
  if (teacher != "linear" && teacher != "none") throw ConfigError("[data] teacher must be linear or none");
  s.teacher = teacher == "linear";
  s.label_noise = c.get_double("data", "label_noise", s.label_noise);
  s.classes = static_cast<int>(c.get_long("data", "classes", s.classes));
  s.one_hot = c.get_bool("data", "one_hot", s.one_hot);
  s.n_val = static_cast<int>(c.get_long("data", "n_val", s.n_val));
  s.n_test = static_cast<int>(c.get_long("data", "n_test", s.n_test));
  r.data.holdout = c.get_long("data", "holdout", 0);
  s.seed = c.get_u64("data", "seed", r.master_seed);
  r.data.train_path = c.get_or("data", "train", "");
  r.data.val_path = c.get_or("data", "val", "");
  r.data.test_path = c.get_or("data", "test", "");
  r.data.distribution_path = c.get_or("data", "distribution", "");
  r.data.classes = static_cast<int>(c.get_long("data", "label_classes", 0));

  const auto arms = c.get_list("whitening", "arms");
  if (!arms.empty()) {
    r.arms.clear();
    for (const auto& a : arms) {
      try {
        r.arms.push_back(WhiteningArm::parse(a));
      } catch (const InputError& e) {
        throw ConfigError(c.source() + ": [whitening] arms: " + e.what());
      }
    }
  }
  r.transform = parse_whiten_mode(c.get_or("whitening", "transform", "pca"));
  r.rank_policy.kind = parse_rank_policy(c.get_or("whitening", "rank_policy", "jitter"));
  r.rank_policy.epsilon = c.get_double("whitening", "epsilon", 0.0);
  r.center = c.get_bool("whitening", "center", false);
  r.distribution_size = c.get_long("whitening", "distribution_size", r.distribution_size);

  const std::string init = c.get_or("linear", "init", "zeros");
  if (init != "zeros" && init != "gaussian") throw ConfigError("[linear] init must be zeros or gaussian");
  r.gaussian_init = init == "gaussian";
  r.grid.t_min = c.get_double("linear", "t_min", 0.0);
  r.grid.t_max = c.get_double("linear", "t_max", 0.0);
  r.grid.points = static_cast<int>(c.get_long("linear", "grid_points", r.grid.points));

  for (long h : c.get_longs("model", "hidden")) r.hidden.push_back(static_cast<int>(h));
  r.activation = parse_activation(c.get_or("model", "activation", "relu"));
  r.head = parse_output_head(c.get_or("model", "head", "linear_mse"));
  r.hidden_bias = c.get_bool("model", "hidden_bias", false);
  const std::string red = c.get_or("model", "reduction", "mean");
  if (red != "mean" && red != "sum") throw ConfigError("[model] reduction must be mean or sum");
  r.reduction = red == "mean" ? Reduction::mean : Reduction::sum;
  r.init_variance = c.get_double("model", "init_variance", r.init_variance);

  OptimizerConfig& o = r.optimizer_config;
  r.optimizer = parse_optimizer_kind(c.get_or("optimizer", "kind", "sgd"));
  o.eta = c.get_double("optimizer", "eta", o.eta);
  r.etas = c.get_doubles("optimizer", "etas");
  o.reg_lambda = c.get_double("optimizer", "reg_lambda", o.reg_lambda);
  r.lambdas = c.get_doubles("optimizer", "lambdas");
  o.batch_size = c.get_long("optimizer", "batch_size", 0);
  o.cg_tol = c.get_double("optimizer", "cg_tol", o.cg_tol);
  o.cg_max_iter = static_cast<int>(c.get_long("optimizer", "cg_max_iter", o.cg_max_iter));
  LineSearchConfig ls;
  ls.backoff = c.get_double("optimizer", "backoff", ls.backoff);
  ls.sufficient_decrease = c.get_double("optimizer", "sufficient_decrease", ls.sufficient_decrease);
  ls.max_backoffs = static_cast<int>(c.get_long("optimizer", "max_backoffs", ls.max_backoffs));
  if (c.get_bool("optimizer", "line_search", false)) o.line_search = ls;

  r.cutoff = c.get_double("stopping", "cutoff", r.cutoff);
  r.max_steps = c.get_long("stopping", "max_steps", r.max_steps);

  c.reject_unknown();
  apply_seed_override(r);
  // The data seed follows the master seed unless pinned explicitly.
  if (!c.has("data", "seed")) r.data.spec.seed = r.master_seed;
  r.validate();
  return r;
}

RunConfig RunConfig::from_file(const std::string& path) {
  ConfigFile c = ConfigFile::load(path);
  return from_config(c);
}

namespace {

struct RunData {
  long full_hold = 0;  // > 0: the full arm sees only this many val/test columns
  std::optional<LabeledData> train;
  std::optional<LabeledData> val;
  std::optional<LabeledData> test;
  std::optional<Dataset> distribution;
};

struct Counts {
  long train;
  long val;
  long test;
};

Counts split_counts(const RunConfig& cfg, long size) {
  if (cfg.convention == SizeConvention::joint) {
    const long hold = std::max(1L, std::lround(0.2 * static_cast<double>(size)));
    return {size - 2 * hold, hold, hold};
  }
  return {size, cfg.data.spec.n_val, cfg.data.spec.n_test};
}

LabeledData require_labels(io::Ingested in, const std::string& path) {
  if (!in.y) throw InputError(path + ": no labels (add a label column or a .wblb companion)");
  return LabeledData(std::move(in.x), std::move(*in.y));
}

RunData load_data(const RunConfig& cfg, long size, int index) {
  const std::uint64_t data_seed = derive_seed(cfg.master_seed, cfg.experiment_id, size, "data", index);
  const Counts n = split_counts(cfg, size);
  RunData out;
  if (cfg.data.synthetic) {
    const SyntheticSource src(cfg.data.spec);
    long n_val = n.val;
    long n_test = n.test;
    if (cfg.data.holdout > 0) {
      out.full_hold = n.val;
      n_val = std::max(n_val, cfg.data.holdout);
      n_test = std::max(n_test, cfg.data.holdout);
    }
    out.train = src.draw(n.train, mix64(data_seed + 1), Split::train);
    if (n_val > 0) out.val = src.draw(n_val, mix64(data_seed + 2), Split::validation);
    if (n_test > 0) out.test = src.draw(n_test, mix64(data_seed + 3), Split::test);
    const bool want_dist = std::any_of(cfg.arms.begin(), cfg.arms.end(), [](const WhiteningArm& a) {
      return a.enabled && a.scope == FitScope::distribution;
    });
    if (want_dist) {
      out.distribution = src.draw(cfg.distribution_size, mix64(data_seed + kDistributionStream), Split::combined).x;
    }
    return out;
  }

  const int k = cfg.data.classes;
  LabeledData full = require_labels(io::ingest(cfg.data.train_path, Split::train, k), cfg.data.train_path);
  if (size > full.size()) {
    throw InputError(cfg.data.train_path + " has " + std::to_string(full.size()) + " samples, fewer than size " +
                     std::to_string(size));
  }
  Rng rng(data_seed);
  const auto perm = permutation(full.size(), rng);
  Matrix x(full.x.feature_dim(), size);
  Matrix y(full.y.output_dim(), size);
  for (long j = 0; j < size; ++j) {
    x.col(j) = full.x.values().col(perm[static_cast<std::size_t>(j)]);
    y.col(j) = full.y.targets().col(perm[static_cast<std::size_t>(j)]);
  }
  out.train = LabeledData(Dataset(std::move(x), Split::train, full.x.id()), LabelSet(std::move(y), full.y.encoding()));
  const int classes = static_cast<int>(full.y.output_dim());
  if (!cfg.data.val_path.empty())
    out.val = require_labels(io::ingest(cfg.data.val_path, Split::validation, classes), cfg.data.val_path);
  if (!cfg.data.test_path.empty())
    out.test = require_labels(io::ingest(cfg.data.test_path, Split::test, classes), cfg.data.test_path);
  if (!cfg.data.distribution_path.empty())
    out.distribution = io::ingest(cfg.data.distribution_path, Split::combined).x;
  return out;
}

struct ArmData {
  LabeledData train;
  std::optional<LabeledData> val;
  std::optional<LabeledData> test;
};

ArmData whiten_arm(const RunConfig& cfg, const WhiteningArm& arm, const RunData& data) {
  if (!arm.enabled) return {*data.train, data.val, data.test};
  const bool full = arm.scope == FitScope::full;
  auto head = [&](const std::optional<LabeledData>& d) -> std::optional<LabeledData> {
    if (!d || !full || data.full_hold <= 0 || d->size() <= data.full_hold) return d;
    return LabeledData(d->x.columns(0, data.full_hold, d->x.split()), d->y.columns(0, data.full_hold));
  };
  const std::optional<LabeledData> val = head(data.val);
  const std::optional<LabeledData> test = head(data.test);
  Dataset fit = data.train->x;
  if (full) {
    std::vector<const Dataset*> parts{&data.train->x};
    if (val) parts.push_back(&val->x);
    if (test) parts.push_back(&test->x);
    fit = concatenate(parts, "train+val+test");
  } else if (arm.scope == FitScope::distribution) {
    fit = *data.distribution;
  }
  WhitenOptions opt;
  opt.mode = cfg.transform;
  opt.policy = cfg.rank_policy;
  opt.scope = arm.scope;
  opt.center = cfg.center;
  const Whitener w = fit_whitener(fit, opt);
  auto map = [&](const std::optional<LabeledData>& d) -> std::optional<LabeledData> {
    if (!d) return std::nullopt;
    return LabeledData(apply(w, d->x), d->y);
  };
  return {LabeledData(apply(w, data.train->x), data.train->y), map(val), map(test)};
}

ResultRow base_row(const RunConfig& cfg, long size, int index, const std::string& arm, const std::string& opt) {
  ResultRow r;
  r.experiment_id = cfg.experiment_id;
  r.seed = index;
  r.dataset_size = size;
  r.whitening_mode = arm;
  r.optimizer = opt;
  return r;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void run_linear(const RunConfig& cfg, const ArmData& d, std::uint64_t run_seed, ResultRow base,
                std::vector<ResultRow>& out) {
  const Eigen::Index k = d.train.y.output_dim();
  const Eigen::Index dim = d.train.x.feature_dim();
  LinearModel w0 = LinearModel::zeros(k, dim);
  if (cfg.gaussian_init) {
    Rng rng(run_seed);
    w0.W = gaussian_matrix(k, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  }
  const Preconditioner p = cfg.kind == ExperimentKind::newton_flow ? Preconditioner::newton : Preconditioner::none;
  const FlowSolution sol = build_flow(d.train.x, d.train.y, w0, p);
  const EarlyStopResult es = early_stop(sol, *d.val, cfg.grid, &d.train, d.test ? &*d.test : nullptr);

  if (cfg.trajectory) {
    for (const TrainStep& s : es.record.steps) {
      ResultRow r = base;
      r.step_or_time = s.time;
      r.train_loss = s.train_loss;
      r.val_loss = s.val_loss;
      r.test_loss = s.test_loss;
      r.test_error = s.test_error;
      out.push_back(r);
    }
  }
  const LinearModel w = flow_at(sol, es.t_star);
  ResultRow r = base;
  r.step_or_time = es.t_star;
  r.train_loss = mse_per_sample(w.predict(d.train.x), d.train.y.targets());
  r.val_loss = es.val_loss;
  if (d.test) {
    const Matrix pt = w.predict(d.test->x);
    r.test_loss = mse_per_sample(pt, d.test->y.targets());
    if (d.test->y.encoding() == LabelEncoding::one_hot) r.test_error = classification_error(pt, d.test->y);
  }
  r.stopping_reason = es.record.stopping_reason;
  out.push_back(r);
}

struct MlpOutcome {
  TrainRecord record;
  double eta = 0.0;
};

bool better_record(const TrainRecord& a, const TrainRecord& b) {
  // NaN validation losses (diverged runs) lose to anything finite.
  if (std::isnan(b.best_val_loss)) return !std::isnan(a.best_val_loss);
  if (std::isnan(a.best_val_loss)) return false;
  return a.best_val_loss < b.best_val_loss;
}

void run_mlp(const RunConfig& cfg, const ArmData& d, std::uint64_t run_seed, double lambda, ResultRow base,
             std::vector<ResultRow>& out) {
  MlpConfig mc;
  mc.layer_sizes.push_back(static_cast<int>(d.train.x.feature_dim()));
  for (int h : cfg.hidden) mc.layer_sizes.push_back(h);
  mc.layer_sizes.push_back(static_cast<int>(d.train.y.output_dim()));
  mc.activation = cfg.activation;
  mc.head = cfg.head;
  mc.hidden_bias = cfg.hidden_bias;
  mc.reduction = cfg.reduction;

  const std::vector<double> etas = cfg.etas.empty() ? std::vector<double>{cfg.optimizer_config.eta} : cfg.etas;
  std::optional<MlpOutcome> best;
  for (double eta : etas) {
    Mlp model = init_isotropic(mc, cfg.init_variance, run_seed);
    TrainOptions opt;
    opt.kind = cfg.optimizer;
    opt.optimizer = cfg.optimizer_config;
    opt.optimizer.eta = eta;
    opt.optimizer.reg_lambda = lambda;
    opt.cutoff = cfg.cutoff;
    opt.max_steps = cfg.max_steps;
    opt.batch_seed = mix64(run_seed ^ 0xba7c4ULL);
    MlpOutcome o{train_to_cutoff(model, d.train, d.val ? &*d.val : nullptr, d.test ? &*d.test : nullptr, opt), eta};
    if (!best || better_record(o.record, best->record)) best = std::move(o);
  }
  if (etas.size() > 1) base.optimizer += ":eta=" + format_g(best->eta);

  const TrainRecord& rec = best->record;
  if (cfg.trajectory) {
    for (const TrainStep& s : rec.steps) {
      ResultRow r = base;
      r.step_or_time = static_cast<double>(s.step);
      r.train_loss = s.train_loss;
      r.val_loss = s.val_loss;
      r.test_loss = s.test_loss;
      r.test_error = s.test_error;
      out.push_back(r);
    }
  }
  ResultRow r = base;
  r.step_or_time = static_cast<double>(rec.best_step);
  for (const TrainStep& s : rec.steps) {
    if (s.step == rec.best_step) r.train_loss = s.train_loss;
  }
  r.val_loss = rec.best_val_loss;
  r.test_loss = rec.test_loss_at_best;
  r.test_error = rec.test_error_at_best;
  r.steps_to_cutoff = rec.steps_to_cutoff;
  r.stopping_reason = rec.stopping_reason;
  out.push_back(r);
}

std::vector<std::pair<std::string, double>> optimizer_variants(const RunConfig& cfg) {
  if (cfg.kind == ExperimentKind::linear_flow) return {{"gradient_flow", 0.0}};
  if (cfg.kind == ExperimentKind::newton_flow) return {{"newton_flow", 0.0}};
  const std::string name = to_string(cfg.optimizer);
  if (cfg.optimizer == OptimizerKind::newton) return {{name, 0.0}};
  if (cfg.optimizer == OptimizerKind::regularized_gn && !cfg.lambdas.empty()) {
    std::vector<std::pair<std::string, double>> v;
    for (double l : cfg.lambdas) v.emplace_back(name + ":lambda=" + format_g(l), l);
    return v;
  }
  if (cfg.optimizer == OptimizerKind::regularized_gn) {
    return {{name + ":lambda=" + format_g(cfg.optimizer_config.reg_lambda), cfg.optimizer_config.reg_lambda}};
  }
  return {{name, 1.0}};
}

}  // namespace

std::vector<ResultRow> run_single(const RunConfig& cfg, long size, int seed_index) {
  std::vector<ResultRow> out;
  const auto variants = optimizer_variants(cfg);
  auto error_rows = [&](const WhiteningArm& arm) {
    for (const auto& [name, lambda] : variants) {
      ResultRow r = base_row(cfg, size, seed_index, arm.name(), name);
      r.stopping_reason = "error";
      out.push_back(r);
    }
  };

  RunData data;
  try {
    data = load_data(cfg, size, seed_index);
  } catch (const Error&) {
    for (const auto& arm : cfg.arms) error_rows(arm);
    return out;
  }
  for (const auto& arm : cfg.arms) {
    std::optional<ArmData> d;
    try {
      d = whiten_arm(cfg, arm, data);
    } catch (const Error&) {
      error_rows(arm);
      continue;
    }
    const std::uint64_t run_seed = derive_seed(cfg.master_seed, cfg.experiment_id, size, arm.name(), seed_index);
    for (const auto& [name, lambda] : variants) {
      const ResultRow base = base_row(cfg, size, seed_index, arm.name(), name);
      const std::size_t mark = out.size();
      try {
        if (cfg.kind == ExperimentKind::mlp) {
          run_mlp(cfg, *d, run_seed, lambda, base, out);
        } else {
          run_linear(cfg, *d, run_seed, base, out);
        }
      } catch (const Error&) {
        out.resize(mark);
        ResultRow r = base;
        r.stopping_reason = "error";
        out.push_back(r);
      }
    }
  }
  return out;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.experiment_id, a.dataset_size, a.whitening_mode, a.seed, a.optimizer) <
           std::tie(b.experiment_id, b.dataset_size, b.whitening_mode, b.seed, b.optimizer);
  });
}

std::vector<ResultRow> sweep(const RunConfig& cfg, int workers) {
  cfg.validate();
  std::vector<std::pair<long, int>> jobs;
  for (long size : cfg.sizes)
    for (int s = 0; s < cfg.seeds; ++s) jobs.emplace_back(size, s);

  std::vector<std::vector<ResultRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      results[i] = run_single(cfg, jobs[i].first, jobs[i].second);
    }
  };
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<ResultRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  sort_rows(rows);
  return rows;
}

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{"experiment_id", "seed",       "dataset_size", "whitening_mode",
                                             "optimizer",     "step_or_time", "train_loss", "val_loss",
                                             "test_loss",     "test_error", "steps_to_cutoff", "stopping_reason"};
  return cols;
}

void write_results(const std::vector<ResultRow>& rows, std::ostream& out) {
  csv::write_record(out, result_columns());
  for (const ResultRow& r : rows) {
    csv::write_record(out, {r.experiment_id, std::to_string(r.seed), std::to_string(r.dataset_size), r.whitening_mode,
                            r.optimizer, csv::format_number(r.step_or_time), csv::format_number(r.train_loss),
                            csv::format_number(r.val_loss), csv::format_number(r.test_loss),
                            csv::format_number(r.test_error),
                            r.steps_to_cutoff >= 0 ? std::to_string(r.steps_to_cutoff) : std::string(),
                            r.stopping_reason});
  }
}

void write_results(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  write_results(rows, out);
  if (!out) throw InputError("failed writing " + path);
}

namespace {

double number_or_missing(const std::string& s, const std::string& path, long line) {
  if (s.empty()) return kMissing;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw ParseError(path + ": line " + std::to_string(line) + ": bad number \"" + s + "\"");
  return v;
}

long integer(const std::string& s, const std::string& path, long line) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError(path + ": line " + std::to_string(line) + ": bad integer \"" + s + "\"");
  }
  return v;
}

}  // namespace

std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  const auto recs = csv::read(in, path);
  if (recs.empty() || recs.front().fields != result_columns()) {
    throw ParseError(path + ": line 1: header does not match the result columns");
  }
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& f = recs[i].fields;
    const long line = recs[i].line;
    if (f.size() != result_columns().size()) {
      throw ParseError(path + ": line " + std::to_string(line) + ": expected " +
                       std::to_string(result_columns().size()) + " fields");
    }
    ResultRow r;
    r.experiment_id = f[0];
    r.seed = integer(f[1], path, line);
    r.dataset_size = integer(f[2], path, line);
    r.whitening_mode = f[3];
    r.optimizer = f[4];
    r.step_or_time = number_or_missing(f[5], path, line);
    r.train_loss = number_or_missing(f[6], path, line);
    r.val_loss = number_or_missing(f[7], path, line);
    r.test_loss = number_or_missing(f[8], path, line);
    r.test_error = number_or_missing(f[9], path, line);
    r.steps_to_cutoff = f[10].empty() ? -1 : integer(f[10], path, line);
    r.stopping_reason = f[11];
    rows.push_back(r);
  }
  return rows;
}

}  // namespace wb
