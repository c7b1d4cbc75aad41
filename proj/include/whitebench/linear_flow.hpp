#pragma once
// Closed-form gradient flow for linear least squares, f(X) = W X with
// L = 0.5 * ||W X - Y||^2. The flow is solved mode by mode in the
// eigenbasis of F_train:
//
//   w_i(t) = w*_i + exp(-r_i t) (w_i(0) - w*_i)
//
// with r_i = lambda_i for plain flow and r_i = 1 for Newton flow. Null modes
// (lambda_i <= 1e-12 lambda_max) have r_i = 0 and keep their initial value.

#include <optional>

#include "whitebench/data_model.hpp"
#include "whitebench/train_record.hpp"

namespace wb {

inline constexpr double kNullModeTolerance = 1e-12;

struct LinearModel {
  Matrix W;  // k x d

  Matrix predict(const Matrix& x) const;
  Matrix predict(const Dataset& x) const { return predict(x.values()); }
  static LinearModel zeros(Eigen::Index k, Eigen::Index d) { return {Matrix::Zero(k, d)}; }
};

struct OptimumResult {
  LinearModel model;
  bool pseudoinverse_fallback = false;  // F_train was singular
  Eigen::Index null_modes = 0;
};

/// Minimum of the squared loss within the data span; the component of W0
/// orthogonal to the span is carried over unchanged. W0 defaults to zeros.
OptimumResult solve_optimum(const Dataset& x, const LabelSet& y,
                            const std::optional<LinearModel>& w0 = std::nullopt);

enum class Preconditioner { none, newton };

class FlowSolution {
 public:
  const Spectrum& spectrum() const { return spectrum_; }
  const Matrix& init_modes() const { return w_init_modes_; }
  const Matrix& star_modes() const { return w_star_modes_; }
  const Vector& rates() const { return rates_; }
  Preconditioner preconditioner() const { return preconditioner_; }
  const LinearModel& initial() const { return w0_; }

  /// Mode coefficients at time t (k x d, column i belongs to eigenvector i).
  Matrix modes_at(double t) const;
  /// V^T X, reused when predicting many times on the same data.
  Matrix project(const Matrix& x) const;
  Matrix predict_projected(const Matrix& projected, double t) const;
  Matrix predict(const Matrix& x, double t) const { return predict_projected(project(x), t); }

  /// Smallest and largest non-zero rate; {0, 0} when every mode is null.
  std::pair<double, double> rate_range() const;

 private:
  friend FlowSolution build_flow(const Dataset&, const LabelSet&, const LinearModel&,
                                 Preconditioner);
  Spectrum spectrum_;
  Matrix w_init_modes_;
  Matrix w_star_modes_;
  Vector rates_;
  Preconditioner preconditioner_ = Preconditioner::none;
  LinearModel w0_;
};

FlowSolution build_flow(const Dataset& x, const LabelSet& y, const LinearModel& w0,
                        Preconditioner precondition);

/// W(t); t must be finite and non-negative. t == 0 returns W(0) exactly.
LinearModel flow_at(const FlowSolution& sol, double t);

struct PredictionResult {
  Matrix predictions;
  bool pseudoinverse_fallback = false;  // K_train was singular
};

/// Converged test predictions from kernel quantities only:
///   f0(X_test) - (f0(X_train) - Y) K_train^+ K_train x test
PredictionResult optimum_predictions(const Dataset& x_train, const LabelSet& y_train,
                                     const Dataset& x_test,
                                     const std::optional<LinearModel>& w0 = std::nullopt);

/// Log-spaced search grid. Non-positive bounds select the defaults
/// [1e-3 / r_max, 40 / r_min].
struct TimeGrid {
  double t_min = 0.0;
  double t_max = 0.0;
  int points = 200;
};

struct EarlyStopResult {
  double t_star = 0.0;
  double val_loss = 0.0;
  bool boundary_hit = false;
  TrainRecord record;
};

/// Minimizes per-sample validation MSE over the grid, then refines with a
/// golden-section search (in log t) between the neighbours of the best grid
/// point. Train and test metrics are recorded along the grid when supplied.
EarlyStopResult early_stop(const FlowSolution& sol, const LabeledData& val, const TimeGrid& grid,
                           const LabeledData* train = nullptr, const LabeledData* test = nullptr);

}  // namespace wb
