#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "whitebench/errors.hpp"
#include "whitebench/iterative_opt.hpp"
#include "whitebench/whitening.hpp"

using namespace wb;

namespace {
// L(w) = sum_i a_i w_i^2 with curvature 2 diag(a); optionally poisoned.
class Quadratic final : public Objective {
 public:
  explicit Quadratic(Vector a, bool poison = false) : a_(std::move(a)), poison_(poison) {}
  Eigen::Index dimension() const override { return a_.size(); }
  double value(const Vector& p) const override { return a_.dot(p.cwiseAbs2()); }
  Vector gradient(const Vector& p) const override {
    Vector g = 2.0 * a_.cwiseProduct(p);
    if (poison_) g(0) = std::nan("");
    return g;
  }
  Vector curvature_product(const Vector&, const Vector& v) const override { return 2.0 * a_.cwiseProduct(v); }

 private:
  Vector a_;
  bool poison_;
};

Dataset gaussian(int d, int n, std::mt19937_64& rng, Split split = Split::train) {
  return Dataset(oracle::random_matrix(d, n, rng), split);
}

LabelSet real_labels(int k, int n, std::mt19937_64& rng) {
  return LabelSet(oracle::random_matrix(k, n, rng), LabelEncoding::real_valued);
}

OptimizerConfig eta(double e) {
  OptimizerConfig c;
  c.eta = e;
  return c;
}
}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(eta(0.0).validate(), InputError);
  OptimizerConfig c;
  c.reg_lambda = 1.5;
  CHECK_THROWS_AS(c.validate(), InputError);
  c.reg_lambda = 0.5;
  c.cg_tol = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("linear objective gradient matches finite differences") {
  std::mt19937_64 rng(41);
  const Dataset x = gaussian(4, 9, rng);
  const LabelSet y = real_labels(3, 9, rng);
  const LinearObjective obj(x, y);
  const Vector p = oracle::random_matrix(12, 1, rng);
  const Vector fd = oracle::finite_difference_gradient([&](const Vector& q) { return obj.value(q); }, p);
  const Vector g = obj.gradient(p);
  CHECK((g - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));

  // Curvature is the exact Hessian: finite differences of the gradient.
  const Vector v = oracle::random_matrix(12, 1, rng);
  const Vector hv = (obj.gradient(p + 1e-4 * v) - obj.gradient(p - 1e-4 * v)) / 2e-4;
  CHECK((obj.curvature_product(p, v) - hv).norm() <= 1e-6 * hv.norm());
}

TEST_CASE("sgd step") {
  const Dataset x(Matrix::Ones(1, 1), Split::train);
  const LabelSet y(Matrix::Ones(1, 1), LabelEncoding::real_valued);
  const LinearObjective obj(x, y);
  const StepResult r = sgd_step(Vector::Zero(1), obj, eta(0.1));
  CHECK(r.params(0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r.diag.loss_before == 0.5);
  CHECK(r.diag.step_size == 0.1);

  const StepResult still = sgd_step(Vector::Ones(1), obj, eta(0.1));
  CHECK(still.params(0) == 1.0);

  CHECK_THROWS_AS(sgd_step(Vector::Ones(2), Quadratic(Vector::Ones(2), true), eta(0.1)), DivergenceError);
  CHECK_THROWS_AS(sgd_step(Vector::Constant(1, 1e200), Quadratic(Vector::Ones(1)), eta(0.1)), DivergenceError);
}

TEST_CASE("full-batch steps follow the activation recursion") {
  std::mt19937_64 rng(42);
  const Dataset x = gaussian(5, 8, rng);
  const LabelSet y = real_labels(2, 8, rng);
  const LinearObjective obj(x, y);
  const Matrix k = compute_K(x);
  Vector p = oracle::random_matrix(10, 1, rng);
  const double e = 0.02;
  for (int step = 0; step < 20; ++step) {
    const Matrix z = obj.unflatten(p) * x.values();
    const Matrix dz = z - y.targets();
    p = sgd_step(p, obj, eta(e)).params;
    const Matrix z_next = obj.unflatten(p) * x.values();
    CHECK(la::max_abs(z_next - (z - e * dz * k)) < 1e-9);
  }
}

TEST_CASE("newton step") {
  std::mt19937_64 rng(43);
  const Dataset x = gaussian(4, 12, rng);
  const LabelSet y = real_labels(2, 12, rng);
  const LinearModel w0{oracle::random_matrix(2, 4, rng)};
  const LinearStepResult r = newton_step(w0, x, y, eta(1.0));
  CHECK(la::max_abs(r.model.W - solve_optimum(x, y).model.W) < 1e-10);
  CHECK_FALSE(r.diag.pseudoinverse_fallback);

  const Dataset wide = gaussian(6, 3, rng);
  CHECK(newton_step(LinearModel::zeros(1, 6), wide, real_labels(1, 3, rng), eta(1.0)).diag.pseudoinverse_fallback);

  // H = I on whitened data: Newton and a full-batch gradient step coincide.
  const Whitener w = fit_whitener(x, {WhitenMode::pca, RankPolicy::manual()});
  const Dataset xh = apply(w, x);
  const LinearStepResult nw = newton_step(w0, xh, y, eta(0.3));
  const StepResult gd = sgd_step(LinearObjective::flatten(w0.W), LinearObjective(xh, y), eta(0.3));
  CHECK(la::max_abs(LinearObjective::flatten(nw.model.W) - gd.params) < 1e-12);
}

TEST_CASE("Newton on raw data tracks GD on whitened data step by step") {
  std::mt19937_64 rng(44);
  const Dataset x = gaussian(6, 20, rng);
  const Dataset xt = gaussian(6, 7, rng, Split::test);
  const LabelSet y = real_labels(3, 20, rng);
  const Whitener w = fit_whitener(x, {WhitenMode::zca, RankPolicy::manual()});
  const Dataset xh = apply(w, x);
  const Dataset xth = apply(w, xt);
  const LinearObjective white(xh, y);
  LinearModel raw{oracle::random_matrix(3, 6, rng)};
  Vector p = LinearObjective::flatten(raw.W * w.transform().inverse());
  const OptimizerConfig cfg = eta(0.05);
  double worst = 0;
  for (int step = 0; step < 100; ++step) {
    raw = newton_step(raw, x, y, cfg).model;
    p = sgd_step(p, white, cfg).params;
    const Matrix wh = white.unflatten(p);
    worst = std::max(worst, la::max_abs(raw.predict(x) - wh * xh.values()));
    worst = std::max(worst, la::max_abs(raw.predict(xt) - wh * xth.values()));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("conjugate gradients") {
  const LinearOperator id = [](const Vector& v) { return v; };
  Vector b(3);
  b << 1, -2, 3;
  const CgResult r = conjugate_gradient_solve(id, b, 1e-12, 10);
  CHECK(r.iterations == 1);
  CHECK(la::max_abs(r.x - b) < 1e-15);

  const LinearOperator two = [](const Vector& v) { return Vector(2.0 * v); };
  Vector b2(2);
  b2 << 2, 4;
  const CgResult r2 = conjugate_gradient_solve(two, b2, 1e-12, 10);
  CHECK(std::abs(r2.x(0) - 1) < 1e-14);
  CHECK(std::abs(r2.x(1) - 2) < 1e-14);

  std::mt19937_64 rng(45);
  const Matrix q = oracle::random_orthogonal(8, rng);
  Vector eig(8);
  eig << 1, 1, 1, 3, 3, 7, 7, 7;
  const Matrix a = q * eig.asDiagonal() * q.transpose();
  const Vector rhs = oracle::random_matrix(8, 1, rng);
  const LinearOperator op = [&](const Vector& v) { return Vector(a * v); };
  const CgResult r3 = conjugate_gradient_solve(op, rhs, 1e-10, 100);
  CHECK(r3.iterations <= 3);
  CHECK(la::max_abs(r3.x - a.ldlt().solve(rhs)) < 1e-8);
  CHECK(r3.residual <= 1e-10);

  Vector spread(8);
  for (int i = 0; i < 8; ++i) spread(i) = std::pow(10.0, i);
  const Matrix hard = q * spread.asDiagonal() * q.transpose();
  const LinearOperator hop = [&](const Vector& v) { return Vector(hard * v); };
  try {
    conjugate_gradient_solve(hop, rhs, 1e-14, 2);
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > 1e-14);
  }

  const LinearOperator neg = [](const Vector& v) { return Vector(-v); };
  CHECK_THROWS_AS(conjugate_gradient_solve(neg, b, 1e-8, 10), ConvergenceError);
  CHECK(conjugate_gradient_solve(id, Vector::Zero(3), 1e-8, 10).x == Vector::Zero(3));
}

TEST_CASE("backtracking line search") {
  const Quadratic q(Vector::Ones(1));
  const Vector w = Vector::Ones(1);
  const Vector dir = -q.gradient(w);
  const LineSearchConfig cfg;
  CHECK(backtracking_line_search(q, w, dir, 0.1, cfg) == 0.1);

  const double s = backtracking_line_search(q, w, dir, 2.0, cfg);
  CHECK(s < 2.0);
  CHECK(q.value(w + s * dir) <= q.value(w) + cfg.sufficient_decrease * s * q.gradient(w).dot(dir));
  // The step before the accepted one must have failed.
  const double prev = s / cfg.backoff;
  CHECK(q.value(w + prev * dir) > q.value(w) + cfg.sufficient_decrease * prev * q.gradient(w).dot(dir));

  CHECK_THROWS_AS(backtracking_line_search(q, w, -dir, 0.1, cfg), InputError);
  LineSearchConfig tight = cfg;
  tight.max_backoffs = 2;
  CHECK_THROWS_AS(backtracking_line_search(q, w, dir, 1e6, tight), StallError);
}

TEST_CASE("line-searched steps never increase the loss") {
  std::mt19937_64 rng(46);
  const Dataset x = gaussian(5, 15, rng);
  const LabelSet y = real_labels(2, 15, rng);
  const LinearObjective obj(x, y);
  OptimizerConfig cfg = eta(10.0);
  cfg.line_search = LineSearchConfig{};
  Vector p = oracle::random_matrix(10, 1, rng);
  for (int i = 0; i < 30; ++i) {
    const StepResult r = sgd_step(p, obj, cfg);
    CHECK(r.diag.loss_after <= r.diag.loss_before);
    p = r.params;
  }
  cfg.reg_lambda = 0.3;
  for (int i = 0; i < 10; ++i) {
    const StepResult r = regularized_gn_step(p, obj, cfg);
    CHECK(r.diag.loss_after <= r.diag.loss_before);
    p = r.params;
  }
}

TEST_CASE("regularized preconditioner in eigen form") {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 0) = 4;
  b(1, 1) = 1;
  const Matrix p = regularized_preconditioner(b, 0.5);
  const Matrix dense = (0.5 * b + 0.5 * Matrix::Identity(2, 2)).inverse();
  CHECK(la::max_abs(p - dense) < 1e-14);
  CHECK(p(0, 0) == doctest::Approx(0.4));
  CHECK(p(1, 1) == doctest::Approx(1.0));

  Vector mu(2);
  mu << 1e6, 1e-6;
  const double lambda = 0.01;
  const Vector s = preconditioner_mode_scales(mu, lambda);
  CHECK(s(0) == doctest::Approx(1.0 / ((1 - lambda) * mu(0))).epsilon(1e-6));
  CHECK(s(1) == doctest::Approx(1.0 / lambda).epsilon(1e-3));

  std::mt19937_64 rng(47);
  const Matrix g = oracle::random_matrix(5, 3, rng);
  const Matrix psd = g * g.transpose();
  for (double l : {0.1, 0.5, 0.9, 1.0}) {
    const Matrix expect = ((1 - l) * psd + l * Matrix::Identity(5, 5)).inverse();
    CHECK(la::max_abs(regularized_preconditioner(psd, l) - expect) < 1e-8 * la::max_abs(expect));
  }
}

TEST_CASE("regularized Gauss-Newton endpoints and continuity") {
  std::mt19937_64 rng(48);
  const Dataset x = gaussian(4, 10, rng);
  const LabelSet y = real_labels(2, 10, rng);
  const LinearObjective obj(x, y);
  const Vector p = oracle::random_matrix(8, 1, rng);
  OptimizerConfig cfg = eta(1.0);
  cfg.cg_tol = 1e-13;

  auto direction = [&](double lambda) {
    cfg.reg_lambda = lambda;
    return Vector(p - regularized_gn_step(p, obj, cfg).params);
  };
  CHECK(la::max_abs(direction(1.0) - obj.gradient(p)) < 1e-10);
  // lambda = 0 with eta = 1 is a full Newton step onto the optimum.
  const Vector star = LinearObjective::flatten(solve_optimum(x, y).model.W);
  CHECK(la::max_abs((p - direction(0.0)) - star) < 1e-8);
  CHECK(la::max_abs(direction(1e-9) - direction(0.0)) < 1e-6);
  CHECK(la::max_abs(direction(1.0 - 1e-9) - direction(1.0)) < 1e-6);

  // Dense oracle: vec(W F) = (F kron I_k) vec(W) for column-major vec.
  const Matrix f = x.values() * x.values().transpose();
  Matrix big = Matrix::Zero(8, 8);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) big.block(2 * i, 2 * j, 2, 2) = f(i, j) * Matrix::Identity(2, 2);
  for (double l : {0.05, 0.5, 0.95}) {
    const Vector expect = ((1 - l) * big + l * Matrix::Identity(8, 8)).ldlt().solve(obj.gradient(p));
    CHECK(la::max_abs(direction(l) - expect) < 1e-8 * std::max(1.0, la::max_abs(expect)));
  }

  cfg.reg_lambda = 0.5;
  cfg.cg_max_iter = 1;
  cfg.cg_tol = 1e-14;
  CHECK_THROWS_AS(regularized_gn_step(p, obj, cfg), ConvergenceError);
}

TEST_CASE("kernel Newton step") {
  std::mt19937_64 rng(49);
  const Dataset x = gaussian(12, 6, rng);
  const Dataset xt = gaussian(12, 4, rng, Split::test);
  const LabelSet y = real_labels(2, 6, rng);
  const Matrix theta = compute_K(x);
  const Matrix theta_tt = compute_mixed_K(x, xt);
  const LinearModel w0{0.5 * oracle::random_matrix(2, 12, rng)};
  const Matrix f = w0.predict(x);
  const Matrix ft = w0.predict(xt);

  OptimizerConfig cfg = eta(1.0);
  const KernelStepResult interp = kernel_newton_step(f, ft, theta, theta_tt, y.targets(), cfg);
  CHECK(la::max_abs(interp.f_train - y.targets()) < 1e-10);

  // Linear features: parameter-space Newton gives the same prediction update.
  cfg.eta = 0.7;
  const KernelStepResult ks = kernel_newton_step(f, ft, theta, theta_tt, y.targets(), cfg);
  const LinearModel nw = newton_step(w0, x, y, cfg).model;
  CHECK(la::max_abs(ks.f_train - nw.predict(x)) < 1e-8);
  CHECK(la::max_abs(ks.f_test - nw.predict(xt)) < 1e-8);

  // Large epsilon: scaled kernel gradient descent.
  cfg.kernel_epsilon = 1e6 * la::max_abs(theta);
  const KernelStepResult big = kernel_newton_step(f, ft, theta, theta_tt, y.targets(), cfg);
  const Matrix gd_dir = cfg.eta / cfg.kernel_epsilon * (f - y.targets()) * theta;
  const Matrix gd_dir_t = cfg.eta / cfg.kernel_epsilon * (f - y.targets()) * theta_tt;
  CHECK(la::max_abs((f - big.f_train) - gd_dir) <= 1e-3 * la::max_abs(gd_dir));
  CHECK(la::max_abs((ft - big.f_test) - gd_dir_t) <= 1e-3 * la::max_abs(gd_dir_t));

  // A singular kernel needs epsilon > 0.
  const Dataset tall = gaussian(3, 6, rng);
  const Matrix sing = compute_K(tall);
  cfg.kernel_epsilon = 0.0;
  CHECK_THROWS_AS(kernel_newton_step(f, ft, sing, theta_tt, y.targets(), cfg), DegenerateError);
  cfg.kernel_epsilon = 1e-3;
  CHECK_NOTHROW(kernel_newton_step(f, ft, sing, theta_tt, y.targets(), cfg));
}
