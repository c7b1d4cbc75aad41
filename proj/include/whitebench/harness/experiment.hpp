#pragma once
// Experiment configuration, execution and result rows.
//
// A run is one (dataset size, seed index) pair. All whitening arms and
// optimizer variants of a run share the same data draw, so comparisons
// across arms are paired. Seeds:
//   data seed = derive_seed(master, id, size, "data", index)
//   run seed  = derive_seed(master, id, size, arm, index)   (init, batches)

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "whitebench/harness/config.hpp"
#include "whitebench/linear_flow.hpp"
#include "whitebench/models.hpp"
#include "whitebench/synthetic.hpp"
#include "whitebench/whitening.hpp"

namespace wb {

enum class ExperimentKind { linear_flow, newton_flow, mlp };
const char* to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

// "none" or a fit scope.
struct WhiteningArm {
  bool enabled = false;
  FitScope scope = FitScope::train_only;

  std::string name() const;
  static WhiteningArm parse(const std::string& s);
};

// train: the size is the training-set size and val/test sizes are fixed.
// joint: the size counts train + val + test, split 6:2:2.
enum class SizeConvention { train, joint };

struct DataSource {
  bool synthetic = true;
  SyntheticSpec spec;            // n_* fields are overwritten per run
  std::string train_path;        // file sources
  std::string val_path;
  std::string test_path;
  std::string distribution_path;
  int classes = 0;
  // Joint convention only: validation and test sets of this size for every
  // arm except full whitening, which keeps the first 20% blocks so that its
  // fit set still totals the dataset size. 0 turns it off.
  long holdout = 0;
};

struct RunConfig {
  std::string experiment_id = "experiment";
  ExperimentKind kind = ExperimentKind::linear_flow;
  std::uint64_t master_seed = 0;
  int seeds = 1;
  std::vector<long> sizes;
  SizeConvention convention = SizeConvention::train;
  DataSource data;

  std::vector<WhiteningArm> arms{WhiteningArm{}};
  WhitenMode transform = WhitenMode::pca;
  RankPolicy rank_policy = RankPolicy::jitter();
  bool center = false;
  long distribution_size = 4096;

  // Linear runs.
  bool gaussian_init = false;  // false: W(0) = 0; true: N(0, 1/d)
  TimeGrid grid;

  // MLP runs.
  std::vector<int> hidden;
  Activation activation = Activation::relu;
  OutputHead head = OutputHead::linear_mse;
  bool hidden_bias = false;
  Reduction reduction = Reduction::mean;
  double init_variance = kDefaultInitVariance;
  OptimizerKind optimizer = OptimizerKind::sgd;
  OptimizerConfig optimizer_config;
  std::vector<double> lambdas;  // one variant per value for regularized_gn
  std::vector<double> etas;     // several: keep the best validation run
  double cutoff = 0.999;
  long max_steps = 10000;

  bool trajectory = false;  // also emit one row per step / grid point
  std::string output = "results.csv";

  void validate() const;
  /// Reads every section, rejects unknown keys and applies WHITEBENCH_SEED.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_config(ConfigFile& cfg);
};

/// WHITEBENCH_SEED, when set, replaces the master seed.
void apply_seed_override(RunConfig& cfg);

struct ResultRow {
  std::string experiment_id;
  long seed = 0;  // seed index
  long dataset_size = 0;
  std::string whitening_mode;
  std::string optimizer;
  double step_or_time = kMissing;
  double train_loss = kMissing;
  double val_loss = kMissing;
  double test_loss = kMissing;
  double test_error = kMissing;
  long steps_to_cutoff = -1;   // empty in CSV when negative
  std::string stopping_reason;  // empty on trajectory rows

  bool terminal() const { return !stopping_reason.empty(); }
};

/// Rows of one (size, seed index) run, in a fixed order.
std::vector<ResultRow> run_single(const RunConfig& cfg, long size, int seed_index);

/// Every size and seed on up to `workers` threads; sorted output.
std::vector<ResultRow> sweep(const RunConfig& cfg, int workers);
inline std::vector<ResultRow> run_experiment(const RunConfig& cfg) { return sweep(cfg, 1); }

/// Stable sort by (experiment_id, dataset_size, whitening_mode, seed, optimizer).
void sort_rows(std::vector<ResultRow>& rows);

const std::vector<std::string>& result_columns();
void write_results(const std::vector<ResultRow>& rows, std::ostream& out);
void write_results(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_results(const std::string& path);

}  // namespace wb
