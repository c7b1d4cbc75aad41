#pragma once
// Discrete-time optimizers over flattened parameter vectors: gradient steps,
// Newton steps for linear least squares, regularized Gauss-Newton solved by
// conjugate gradients, backtracking line search, and the function-space
// regularized Newton update for models with fixed features.

#include <functional>
#include <optional>

#include "whitebench/linear_flow.hpp"

namespace wb {

struct LineSearchConfig {
  double backoff = 0.5;
  double sufficient_decrease = 1e-4;
  int max_backoffs = 50;
};

struct OptimizerConfig {
  double eta = 0.01;
  // 0 is pure Gauss-Newton, 1 is gradient descent.
  double reg_lambda = 1.0;
  double kernel_epsilon = 0.0;
  long batch_size = 0;  // 0 selects full batch
  double cg_tol = 1e-5;
  int cg_max_iter = 2000;
  // When set, eta is the initial trial step of each backtracking search.
  std::optional<LineSearchConfig> line_search;

  void validate() const;
};

/// A differentiable loss over a fixed batch.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Vector& params) const = 0;
  virtual Vector gradient(const Vector& params) const = 0;
  /// Gauss-Newton curvature at `params` applied to v.
  virtual Vector curvature_product(const Vector& params, const Vector& v) const = 0;
};

/// L(W) = 0.5 * ||W X - Y||^2 with W flattened column-major. Its Gauss-Newton
/// matrix is the exact Hessian, F (x) I_k.
class LinearObjective final : public Objective {
 public:
  LinearObjective(const Dataset& x, const LabelSet& y);
  Eigen::Index dimension() const override { return k_ * d_; }
  double value(const Vector& params) const override;
  Vector gradient(const Vector& params) const override;
  Vector curvature_product(const Vector& params, const Vector& v) const override;

  Matrix unflatten(const Vector& params) const;
  static Vector flatten(const Matrix& w);

 private:
  Matrix x_;
  Matrix y_;
  Matrix f_;
  Eigen::Index k_;
  Eigen::Index d_;
};

struct StepDiagnostics {
  double step_size = 0.0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  bool pseudoinverse_fallback = false;
};

struct StepResult {
  Vector params;
  StepDiagnostics diag;
};

/// p <- p - eta * grad. Throws DivergenceError on a non-finite gradient or loss.
StepResult sgd_step(const Vector& params, const Objective& batch, const OptimizerConfig& cfg);

/// W <- W - eta (dL/dW) H^+ with H = F_train.
struct LinearStepResult {
  LinearModel model;
  StepDiagnostics diag;
};
LinearStepResult newton_step(const LinearModel& model, const Dataset& x, const LabelSet& y,
                             const OptimizerConfig& cfg);

/// Solves ((1 - lambda) B + lambda I) p = grad by conjugate gradients and steps
/// by -eta p (or a line-searched multiple of it).
StepResult regularized_gn_step(const Vector& params, const Objective& objective,
                               const OptimizerConfig& cfg);

/// Dense eigen-form of ((1 - lambda) B + lambda I)^-1 for symmetric PSD B.
Matrix regularized_preconditioner(const Matrix& b, double lambda);
/// 1 / ((1 - lambda) mu_i + lambda) for each curvature eigenvalue mu_i.
Vector preconditioner_mode_scales(const Vector& mu, double lambda);

struct CgResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;
};

using LinearOperator = std::function<Vector(const Vector&)>;

/// Stops once ||A x - b||_2 <= tol. Throws ConvergenceError past max_iter or
/// when the operator shows non-positive curvature.
CgResult conjugate_gradient_solve(const LinearOperator& apply_a, const Vector& b, double tol,
                                  int max_iter);

/// Largest s in {s0, s0 rho, s0 rho^2, ...} with
/// L(p + s dir) <= L(p) + c s <grad, dir>.
double backtracking_line_search(const Objective& objective, const Vector& params,
                                const Vector& direction, double initial_step,
                                const LineSearchConfig& cfg);

struct KernelStepResult {
  Matrix f_train;
  Matrix f_test;
};

/// f(x) <- f(x) - eta sum_ab Theta(x, x_a) [(eps I + Theta)^-1]_ab (f_b - y_b)
/// for MSE. theta_train_test is n_train x n_test.
KernelStepResult kernel_newton_step(const Matrix& f_train, const Matrix& f_test,
                                    const Matrix& theta_train, const Matrix& theta_train_test,
                                    const Matrix& y_train, const OptimizerConfig& cfg);

}  // namespace wb
