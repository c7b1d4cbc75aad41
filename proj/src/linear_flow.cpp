#include "whitebench/linear_flow.hpp"

#include <cmath>

#include "whitebench/errors.hpp"

namespace wb {

Matrix LinearModel::predict(const Matrix& x) const {
  if (x.rows() != W.cols()) throw ShapeError("linear model feature dimension mismatch");
  return la::multiply(W, x);
}

namespace {

struct ModeSolve {
  Spectrum spectrum;
  Matrix star_modes;  // k x d
  Matrix init_modes;  // k x d
  Eigen::Index null_modes = 0;
  Vector active;      // 1 for non-null modes
};

ModeSolve solve_modes(const Dataset& x, const LabelSet& y, const LinearModel& w0) {
  check_paired(x, y);
  const Eigen::Index d = x.feature_dim();
  if (w0.W.rows() != y.output_dim() || w0.W.cols() != d) {
    throw ShapeError("initial weights must be " + std::to_string(y.output_dim()) + " x " +
                     std::to_string(d));
  }
  ModeSolve m;
  m.spectrum = eigh(compute_F(x));
  const Matrix& v = m.spectrum.eigenvectors;
  const double top = m.spectrum.eigenvalues(0);
  // Y X^T V, column i is the data-driven force on mode i.
  const Matrix projected = la::tn(v, x.values());
  const Matrix force = la::multiply_nt(y.targets(), projected);
  m.init_modes = la::multiply(w0.W, v);
  m.star_modes = m.init_modes;
  m.active = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double lambda = m.spectrum.eigenvalues(i);
    if (top > 0.0 && lambda > kNullModeTolerance * top) {
      m.star_modes.col(i) = force.col(i) / lambda;
      m.active(i) = 1.0;
    } else {
      ++m.null_modes;
    }
  }
  return m;
}

}  // namespace

OptimumResult solve_optimum(const Dataset& x, const LabelSet& y,
                            const std::optional<LinearModel>& w0) {
  const LinearModel init = w0 ? *w0 : LinearModel::zeros(y.output_dim(), x.feature_dim());
  ModeSolve m = solve_modes(x, y, init);
  OptimumResult r;
  r.model.W = la::multiply_nt(m.star_modes, m.spectrum.eigenvectors);
  r.null_modes = m.null_modes;
  r.pseudoinverse_fallback = m.null_modes > 0;
  return r;
}

FlowSolution build_flow(const Dataset& x, const LabelSet& y, const LinearModel& w0,
                        Preconditioner precondition) {
  ModeSolve m = solve_modes(x, y, w0);
  FlowSolution s;
  s.rates_ = Vector::Zero(x.feature_dim());
  for (Eigen::Index i = 0; i < s.rates_.size(); ++i) {
    if (m.active(i) != 0.0) {
      s.rates_(i) = precondition == Preconditioner::newton ? 1.0 : m.spectrum.eigenvalues(i);
    }
  }
  s.spectrum_ = std::move(m.spectrum);
  s.w_init_modes_ = std::move(m.init_modes);
  s.w_star_modes_ = std::move(m.star_modes);
  s.preconditioner_ = precondition;
  s.w0_ = w0;
  return s;
}

Matrix FlowSolution::modes_at(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("flow time must be finite and >= 0");
  Matrix out = w_star_modes_;
  for (Eigen::Index i = 0; i < rates_.size(); ++i) {
    if (rates_(i) == 0.0) {
      out.col(i) = w_init_modes_.col(i);
    } else {
      out.col(i) += std::exp(-rates_(i) * t) * (w_init_modes_.col(i) - w_star_modes_.col(i));
    }
  }
  return out;
}

Matrix FlowSolution::project(const Matrix& x) const {
  if (x.rows() != spectrum_.eigenvectors.rows()) throw ShapeError("flow feature dimension mismatch");
  return la::tn(spectrum_.eigenvectors, x);
}

Matrix FlowSolution::predict_projected(const Matrix& projected, double t) const {
  return la::multiply(modes_at(t), projected);
}

std::pair<double, double> FlowSolution::rate_range() const {
  double lo = 0.0;
  double hi = 0.0;
  for (Eigen::Index i = 0; i < rates_.size(); ++i) {
    const double r = rates_(i);
    if (r <= 0.0) continue;
    hi = std::max(hi, r);
    lo = lo == 0.0 ? r : std::min(lo, r);
  }
  return {lo, hi};
}

LinearModel flow_at(const FlowSolution& sol, double t) {
  if (t == 0.0) return sol.initial();
  return {la::multiply_nt(sol.modes_at(t), sol.spectrum().eigenvectors)};
}

PredictionResult optimum_predictions(const Dataset& x_train, const LabelSet& y_train,
                                     const Dataset& x_test, const std::optional<LinearModel>& w0) {
  check_paired(x_train, y_train);
  const Matrix k_train = compute_K(x_train);
  const Matrix k_mixed = compute_mixed_K(x_train, x_test);
  const Spectrum ks = eigh(k_train);
  PredictionResult r;
  r.pseudoinverse_fallback = ks.count_above(kPseudoinverseTolerance) < k_train.rows();
  const Matrix k_pinv = pseudoinverse(k_train);
  Matrix residual = -y_train.targets();
  Matrix base = Matrix::Zero(y_train.output_dim(), x_test.sample_count());
  if (w0) {
    residual += w0->predict(x_train);
    base = w0->predict(x_test);
  }
  r.predictions = base - la::multiply(la::multiply(residual, k_pinv), k_mixed);
  return r;
}

namespace {

struct Evaluator {
  const FlowSolution& sol;
  const LabeledData& val;
  Matrix val_proj;
  const LabeledData* train;
  Matrix train_proj;
  const LabeledData* test;
  Matrix test_proj;

  Evaluator(const FlowSolution& s, const LabeledData& v, const LabeledData* tr,
            const LabeledData* te)
      : sol(s), val(v), val_proj(s.project(v.x.values())), train(tr), test(te) {
    if (train) train_proj = s.project(train->x.values());
    if (test) test_proj = s.project(test->x.values());
  }

  double val_loss(double t) const {
    return mse_per_sample(sol.predict_projected(val_proj, t), val.y.targets());
  }

  TrainStep observe(long index, double t) const {
    TrainStep s;
    s.step = index;
    s.time = t;
    s.val_loss = val_loss(t);
    if (train) {
      const Matrix p = sol.predict_projected(train_proj, t);
      s.train_loss = mse_per_sample(p, train->y.targets());
      if (train->y.encoding() == LabelEncoding::one_hot) {
        s.train_accuracy = 1.0 - classification_error(p, train->y);
      }
    }
    if (test) {
      const Matrix p = sol.predict_projected(test_proj, t);
      s.test_loss = mse_per_sample(p, test->y.targets());
      if (test->y.encoding() == LabelEncoding::one_hot) s.test_error = classification_error(p, test->y);
    }
    return s;
  }
};

}  // namespace

EarlyStopResult early_stop(const FlowSolution& sol, const LabeledData& val, const TimeGrid& grid,
                           const LabeledData* train, const LabeledData* test) {
  if (grid.points < 2) throw InputError("time grid needs at least two points");
  auto [r_min, r_max] = sol.rate_range();
  double t_min = grid.t_min;
  double t_max = grid.t_max;
  if (t_min <= 0.0) t_min = r_max > 0.0 ? 1e-3 / r_max : 1e-3;
  if (t_max <= 0.0) t_max = r_min > 0.0 ? 40.0 / r_min : 40.0;
  if (!(t_max > t_min)) throw InputError("time grid needs t_max > t_min > 0");

  const Evaluator eval(sol, val, train, test);
  const double log_lo = std::log(t_min);
  const double step = (std::log(t_max) - log_lo) / (grid.points - 1);
  auto grid_time = [&](int i) { return i == grid.points - 1 ? t_max : std::exp(log_lo + step * i); };

  EarlyStopResult out;
  int best = 0;
  double best_loss = 0.0;
  for (int i = 0; i < grid.points; ++i) {
    const TrainStep s = eval.observe(i, grid_time(i));
    out.record.push(s);
    if (i == 0 || s.val_loss < best_loss) {
      best = i;
      best_loss = s.val_loss;
    }
  }

  double t_star = grid_time(best);
  if (best == 0 || best == grid.points - 1) {
    out.boundary_hit = true;
  } else {
    // Golden-section search on log t over the bracketing grid cell pair.
    constexpr double kInvPhi = 0.6180339887498949;
    double a = log_lo + step * (best - 1);
    double b = log_lo + step * (best + 1);
    double c = b - kInvPhi * (b - a);
    double e = a + kInvPhi * (b - a);
    double fc = eval.val_loss(std::exp(c));
    double fe = eval.val_loss(std::exp(e));
    for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
      if (fc < fe) {
        b = e;
        e = c;
        fe = fc;
        c = b - kInvPhi * (b - a);
        fc = eval.val_loss(std::exp(c));
      } else {
        a = c;
        c = e;
        fc = fe;
        e = a + kInvPhi * (b - a);
        fe = eval.val_loss(std::exp(e));
      }
    }
    const double t_refined = std::exp(fc < fe ? c : e);
    if (eval.val_loss(t_refined) < best_loss) t_star = t_refined;
  }

  const TrainStep at = eval.observe(grid.points, t_star);
  out.t_star = t_star;
  out.val_loss = at.val_loss;
  out.record.best_step = best;
  out.record.best_time = t_star;
  out.record.best_val_loss = at.val_loss;
  out.record.test_loss_at_best = at.test_loss;
  out.record.test_error_at_best = at.test_error;
  out.record.stopping_reason = out.boundary_hit ? "boundary" : "interior";
  out.record.metadata["preconditioner"] =
      sol.preconditioner() == Preconditioner::newton ? "newton" : "none";
  return out;
}

}  // namespace wb
