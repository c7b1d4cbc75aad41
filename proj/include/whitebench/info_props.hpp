#pragma once
// Executable forms of the information results: K-compression of fully
// whitened data, parameter counting, orbit equivalence of training under
// rotations of the inputs, and null predictions after full whitening.

#include <cstdint>
#include <string>
#include <vector>

#include "whitebench/models.hpp"
#include "whitebench/whitening.hpp"

namespace wb {

/// Fully whitened d x n data stored as Q X_hat = [I | payload]; only the
/// payload, d x (n - d), is kept.
struct CompressedDataset {
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  Matrix payload;
  // Original column index of each stored column (identity block first).
  // Empty when no permutation was needed.
  std::vector<Eigen::Index> column_permutation;
  double leading_condition = 1.0;

  Eigen::Index stored_scalars() const { return payload.size(); }
};

/// Requires n >= d and every eigenvalue of F(X_hat) within whiteness_tol of 1.
/// Falls back to a column-pivoted choice of the identity block when the
/// leading d columns are ill-conditioned (condition number above 1e8).
CompressedDataset compress_whitened(const Dataset& xhat, double whiteness_tol = 1e-6);

/// K = X~^+ X~ with the column permutation undone.
Matrix reconstruct_K(const CompressedDataset& c);

/// Scalars needed to pin down K: min(n d - (d^2 - d)/2, (n^2 + n)/2) for raw
/// data (d is capped at n, where the samples span at most n directions), and
/// (n - d) d for whitened data. Whitened with n < d throws DomainError.
std::int64_t count_information_parameters(std::int64_t d, std::int64_t n, bool whitened);

void write_compressed(const CompressedDataset& c, const std::string& path);
CompressedDataset read_compressed(const std::string& path);

struct OrbitConfig {
  MlpConfig model;
  double init_variance = kDefaultInitVariance;
  OptimizerConfig optimizer;
  long steps = 20;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

struct OrbitReport {
  double theta_deviation = 0.0;        // deeper-layer parameters
  double first_layer_deviation = 0.0;  // W_rotated R - W
  double activation_deviation = 0.0;   // Z on the training set
  double loss_deviation = 0.0;
  double prediction_deviation = 0.0;   // f(X_test) vs f(R X_test)
  double max_deviation = 0.0;
  double tol = 0.0;
  bool pass = false;
};

/// Trains twice, once on (X, W0) and once on (R X, W0 R^T), with the same
/// deeper-layer init and batch order, and compares the trajectories step by step.
OrbitReport orbit_equivalence_check(const LabeledData& train, const Dataset& test, const Matrix& r,
                                    const OrbitConfig& cfg);

struct NullReport {
  double max_abs_prediction = 0.0;     // largest |f(X_test)| over both routes
  double test_loss = 0.0;
  double test_error = 0.0;
  double tie_break_error = 0.0;        // error of predicting class 0 everywhere
  bool pass = false;
};

/// Linear model, W(0) = 0, full-scope PCA whitening with manual rank control
/// over train + test, n_train + n_test <= d. Predictions at the optimum are
/// computed from K (optimum_predictions) and from W* (solve_optimum).
NullReport full_whitening_null_check(int d, int n_train, int n_test, int classes, std::uint64_t seed,
                                     double tol = 1e-8);

struct ChanceReport {
  std::vector<double> errors;  // per seed
  double mean_error = 0.0;
  double lower = 0.0;          // central 95% range of Binomial(N, 1 - 1/k) / N
  double upper = 0.0;
  long trials = 0;
  bool pass = false;
};

struct MlpChanceConfig {
  MlpConfig model;            // layer_sizes.front() is d, .back() is k
  int n_train = 40;
  int n_test = 24;
  int seeds = 10;
  double init_variance = 0.0;  // 0 selects 1 / fan-in
  OptimizerConfig optimizer;
  long max_steps = 2000;
  double cutoff = 0.999;
  std::uint64_t seed = 0;
};

/// Trains an MLP on fully whitened synthetic data with n_train + n_test <= d
/// and checks the mean test error against the binomial range around chance.
ChanceReport full_whitening_mlp_chance_check(const MlpChanceConfig& cfg);

/// Central interval [lo, hi] of Binomial(trials, p) / trials holding >= 1 - alpha mass.
std::pair<double, double> binomial_interval(long trials, double p, double alpha = 0.05);

}  // namespace wb
