#include "whitebench/iterative_opt.hpp"

#include <cmath>

#include "whitebench/errors.hpp"

namespace wb {

void OptimizerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InputError("learning rate must be positive");
  if (!(reg_lambda >= 0.0 && reg_lambda <= 1.0)) throw InputError("reg_lambda must lie in [0, 1]");
  if (!(kernel_epsilon >= 0.0)) throw InputError("kernel_epsilon must be non-negative");
  if (batch_size < 0) throw InputError("batch_size must be positive (0 for full batch)");
  if (!(cg_tol > 0.0)) throw InputError("cg_tol must be positive");
  if (cg_max_iter < 1) throw InputError("cg_max_iter must be positive");
  if (line_search) {
    if (!(line_search->backoff > 0.0 && line_search->backoff < 1.0)) {
      throw InputError("line search backoff must lie in (0, 1)");
    }
    if (!(line_search->sufficient_decrease > 0.0 && line_search->sufficient_decrease < 1.0)) {
      throw InputError("line search sufficient-decrease constant must lie in (0, 1)");
    }
  }
}

LinearObjective::LinearObjective(const Dataset& x, const LabelSet& y)
    : x_(x.values()), y_(y.targets()), f_(compute_F(x)), k_(y.output_dim()), d_(x.feature_dim()) {
  check_paired(x, y);
}

Matrix LinearObjective::unflatten(const Vector& params) const {
  if (params.size() != k_ * d_) throw ShapeError("parameter vector has the wrong length");
  return Eigen::Map<const Matrix>(params.data(), k_, d_);
}

Vector LinearObjective::flatten(const Matrix& w) {
  return Eigen::Map<const Vector>(w.data(), w.size());
}

double LinearObjective::value(const Vector& params) const {
  return 0.5 * (la::multiply(unflatten(params), x_) - y_).squaredNorm();
}

Vector LinearObjective::gradient(const Vector& params) const {
  const Matrix residual = la::multiply(unflatten(params), x_) - y_;
  return flatten(la::multiply_nt(residual, x_));
}

Vector LinearObjective::curvature_product(const Vector&, const Vector& v) const {
  return flatten(la::multiply(unflatten(v), f_));
}

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!la::all_finite(v)) throw DivergenceError(std::string(what) + " is not finite");
}

double checked_value(const Objective& objective, const Vector& p) {
  const double v = objective.value(p);
  if (!std::isfinite(v)) throw DivergenceError("loss is not finite");
  return v;
}

}  // namespace

StepResult sgd_step(const Vector& params, const Objective& batch, const OptimizerConfig& cfg) {
  cfg.validate();
  StepResult r;
  r.diag.loss_before = checked_value(batch, params);
  const Vector g = batch.gradient(params);
  if (!la::all_finite(g)) {
    throw DivergenceError("gradient is not finite (loss before step " +
                          std::to_string(r.diag.loss_before) + ")");
  }
  double step = cfg.eta;
  if (cfg.line_search && g.squaredNorm() > 0.0) {
    step = backtracking_line_search(batch, params, -g, cfg.eta, *cfg.line_search);
  }
  r.params = params - step * g;
  r.diag.step_size = step;
  r.diag.loss_after = checked_value(batch, r.params);
  return r;
}

LinearStepResult newton_step(const LinearModel& model, const Dataset& x, const LabelSet& y,
                             const OptimizerConfig& cfg) {
  cfg.validate();
  check_paired(x, y);
  const Matrix f = compute_F(x);
  const Spectrum spec = eigh(f);
  const Matrix residual = model.predict(x) - y.targets();
  const Matrix grad = la::multiply_nt(residual, x.values());
  if (!la::all_finite(grad)) throw DivergenceError("gradient is not finite");

  LinearStepResult r;
  r.diag.pseudoinverse_fallback = spec.count_above(kPseudoinverseTolerance) < f.rows();
  r.diag.loss_before = 0.5 * residual.squaredNorm();
  r.diag.step_size = cfg.eta;
  r.model.W = model.W - cfg.eta * la::multiply(grad, pseudoinverse(f));
  r.diag.loss_after = 0.5 * (r.model.predict(x) - y.targets()).squaredNorm();
  if (!std::isfinite(r.diag.loss_after)) throw DivergenceError("loss is not finite");
  return r;
}

StepResult regularized_gn_step(const Vector& params, const Objective& objective,
                               const OptimizerConfig& cfg) {
  cfg.validate();
  StepResult r;
  r.diag.loss_before = checked_value(objective, params);
  const Vector g = objective.gradient(params);
  require_finite(g, "gradient");

  const double lambda = cfg.reg_lambda;
  Vector direction;
  if (lambda == 1.0) {
    direction = g;
  } else {
    LinearOperator op = [&](const Vector& v) -> Vector {
      Vector out = (1.0 - lambda) * objective.curvature_product(params, v);
      if (lambda != 0.0) out += lambda * v;
      return out;
    };
    CgResult cg = conjugate_gradient_solve(op, g, cfg.cg_tol, cfg.cg_max_iter);
    direction = std::move(cg.x);
    r.diag.cg_iterations = cg.iterations;
    r.diag.cg_residual = cg.residual;
  }
  require_finite(direction, "update direction");

  double step = cfg.eta;
  if (cfg.line_search && direction.squaredNorm() > 0.0) {
    step = backtracking_line_search(objective, params, -direction, cfg.eta, *cfg.line_search);
  }
  r.params = params - step * direction;
  r.diag.step_size = step;
  r.diag.loss_after = checked_value(objective, r.params);
  return r;
}

Vector preconditioner_mode_scales(const Vector& mu, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0, 1]");
  Vector out(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double denom = (1.0 - lambda) * mu(i) + lambda;
    if (!(denom > 0.0)) throw DegenerateError("preconditioner is singular (lambda = 0 with a null mode)");
    out(i) = 1.0 / denom;
  }
  return out;
}

Matrix regularized_preconditioner(const Matrix& b, double lambda) {
  const Spectrum s = eigh(b);
  const Vector scales = preconditioner_mode_scales(s.eigenvalues, lambda);
  return la::symmetrize(s.eigenvectors * scales.asDiagonal() * s.eigenvectors.transpose());
}

CgResult conjugate_gradient_solve(const LinearOperator& apply_a, const Vector& b, double tol,
                                  int max_iter) {
  if (!(tol > 0.0)) throw InputError("CG tolerance must be positive");
  if (!la::all_finite(b)) throw InputError("CG right-hand side is not finite");
  CgResult out;
  out.x = Vector::Zero(b.size());
  Vector r = b;
  double rr = r.squaredNorm();
  out.residual = std::sqrt(rr);
  if (out.residual <= tol) return out;
  Vector p = r;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector ap = apply_a(p);
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) {
      throw ConvergenceError("CG found non-positive curvature; operator is not positive definite",
                             out.residual, it - 1);
    }
    const double alpha = rr / curvature;
    out.x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    out.iterations = it;
    out.residual = std::sqrt(rr_next);
    if (out.residual <= tol) return out;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  throw ConvergenceError("CG did not reach residual " + std::to_string(tol) + " within " +
                             std::to_string(max_iter) + " iterations (residual " +
                             std::to_string(out.residual) + ")",
                         out.residual, max_iter);
}

double backtracking_line_search(const Objective& objective, const Vector& params,
                                const Vector& direction, double initial_step,
                                const LineSearchConfig& cfg) {
  if (!(initial_step > 0.0)) throw InputError("initial step must be positive");
  const double slope = objective.gradient(params).dot(direction);
  if (!(slope < 0.0)) throw InputError("line search direction is not a descent direction");
  const double base = checked_value(objective, params);
  double step = initial_step;
  for (int k = 0; k <= cfg.max_backoffs; ++k) {
    const double trial = objective.value(params + step * direction);
    if (std::isfinite(trial) && trial <= base + cfg.sufficient_decrease * step * slope) return step;
    step *= cfg.backoff;
  }
  throw StallError("no step satisfied sufficient decrease after " +
                   std::to_string(cfg.max_backoffs) + " backoffs");
}

KernelStepResult kernel_newton_step(const Matrix& f_train, const Matrix& f_test,
                                    const Matrix& theta_train, const Matrix& theta_train_test,
                                    const Matrix& y_train, const OptimizerConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = theta_train.rows();
  if (theta_train.cols() != n || f_train.cols() != n || y_train.cols() != n ||
      y_train.rows() != f_train.rows()) {
    throw ShapeError("kernel step: training shapes disagree");
  }
  if (theta_train_test.rows() != n || theta_train_test.cols() != f_test.cols() ||
      f_test.rows() != f_train.rows()) {
    throw ShapeError("kernel step: test shapes disagree");
  }
  Matrix a = la::symmetrize(theta_train);
  a.diagonal().array() += cfg.kernel_epsilon;
  const Spectrum s = eigh(a);
  const double top = std::abs(s.eigenvalues(0));
  const double bottom = s.eigenvalues(n - 1);
  if (!(top > 0.0) || bottom <= 1e-12 * top) {
    throw DegenerateError("eps I + Theta is singular; use kernel_epsilon > 0");
  }
  // (f - y) (eps I + Theta)^-1, as a k x n row block.
  const Matrix g = f_train - y_train;
  const Vector inv = s.eigenvalues.cwiseInverse();
  const Matrix solved =
      la::multiply_nt(la::multiply(g, s.eigenvectors) * inv.asDiagonal(), s.eigenvectors);
  KernelStepResult r;
  r.f_train = f_train - cfg.eta * la::multiply(solved, theta_train);
  r.f_test = f_test - cfg.eta * la::multiply(solved, theta_train_test);
  return r;
}

}  // namespace wb
