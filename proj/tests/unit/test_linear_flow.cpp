#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "whitebench/errors.hpp"
#include "whitebench/linear_flow.hpp"
#include "whitebench/synthetic.hpp"
#include "whitebench/whitening.hpp"

using namespace wb;

namespace {
Dataset gaussian(int d, int n, std::mt19937_64& rng, Split split = Split::train) {
  return Dataset(oracle::random_matrix(d, n, rng), split);
}

LabelSet real_labels(int k, int n, std::mt19937_64& rng) {
  return LabelSet(oracle::random_matrix(k, n, rng), LabelEncoding::real_valued);
}

LabelSet one_hot(int k, int n, std::mt19937_64& rng) {
  std::vector<int> c(n);
  std::uniform_int_distribution<int> u(0, k - 1);
  for (int& v : c) v = u(rng);
  return LabelSet::from_classes(c, k);
}

// Normal-equation solve through a plain LDLT, for full-rank F.
Matrix normal_solution(const Matrix& x, const Matrix& y) {
  const Matrix f = x * x.transpose();
  return f.ldlt().solve(x * y.transpose()).transpose();
}
}  // namespace

TEST_CASE("solve_optimum on small systems") {
  const Dataset id(Matrix::Identity(2, 2), Split::train);
  const LabelSet y = LabelSet::from_classes({0, 1}, 2);
  const OptimumResult r = solve_optimum(id, y);
  CHECK(la::max_abs(r.model.W - Matrix::Identity(2, 2)) < 1e-14);
  CHECK_FALSE(r.pseudoinverse_fallback);

  Matrix x(2, 3);
  x << 1, 0, 1, 0, 1, 1;
  Matrix t(1, 3);
  t << 0.3, -1.2, 2.0;
  const OptimumResult toy = solve_optimum(Dataset(x, Split::train), LabelSet(t, LabelEncoding::real_valued));
  const Matrix w = toy.model.W;
  CHECK(la::max_abs(x * x.transpose() * w.transpose() - x * t.transpose()) < 1e-10);
}

TEST_CASE("solve_optimum zeroes the in-span gradient and keeps the orthogonal part") {
  std::mt19937_64 rng(31);
  const int d = 9;
  const int n = 4;
  const Dataset x = gaussian(d, n, rng);
  const LabelSet y = real_labels(3, n, rng);
  const LinearModel w0{oracle::random_matrix(3, d, rng)};
  const OptimumResult r = solve_optimum(x, y, w0);
  CHECK(r.pseudoinverse_fallback);
  CHECK(r.null_modes == d - n);
  const Matrix& xv = x.values();
  const Matrix grad = (r.model.W * xv - y.targets()) * xv.transpose();
  CHECK(la::max_abs(grad) <= 1e-8);
  // Projector onto the orthogonal complement of the data span.
  const Matrix p_perp = Matrix::Identity(d, d) - xv * (xv.transpose() * xv).inverse() * xv.transpose();
  CHECK(la::max_abs(r.model.W * p_perp - w0.W * p_perp) < 1e-10);
}

TEST_CASE("flow basics") {
  // One mode with lambda = 2, w* = 1.
  const Dataset x(Matrix::Constant(1, 1, std::sqrt(2.0)), Split::train);
  const LabelSet y(Matrix::Constant(1, 1, std::sqrt(2.0)), LabelEncoding::real_valued);
  const FlowSolution sol = build_flow(x, y, LinearModel::zeros(1, 1), Preconditioner::none);
  CHECK(flow_at(sol, std::log(2.0) / 2).W(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  const Matrix rk = oracle::rk4_flow(Matrix::Zero(1, 1), x.values(), y.targets(), Matrix::Identity(1, 1),
                                     std::log(2.0) / 2, 1000);
  CHECK(std::abs(rk(0, 0) - 0.5) < 1e-10);

  std::mt19937_64 rng(32);
  const Dataset xr = gaussian(4, 10, rng);
  const LabelSet yr = real_labels(2, 10, rng);
  const LinearModel star = solve_optimum(xr, yr).model;
  const FlowSolution at_star = build_flow(xr, yr, star, Preconditioner::none);
  for (double t : {0.0, 0.1, 3.0, 1e3}) CHECK(la::max_abs(flow_at(at_star, t).W - star.W) < 1e-10);

  const LinearModel w0{oracle::random_matrix(2, 4, rng)};
  const FlowSolution s = build_flow(xr, yr, w0, Preconditioner::none);
  CHECK(flow_at(s, 0.0).W == w0.W);
  const double rmin = s.rate_range().first;
  CHECK(la::max_abs(flow_at(s, 40.0 / rmin).W - star.W) < 1e-12 * std::max(1.0, la::max_abs(star.W)) * 100);
  CHECK(la::max_abs(flow_at(s, 1e6 / rmin).W - star.W) < 1e-6);
  CHECK_THROWS(flow_at(s, -1.0));
  CHECK_THROWS(flow_at(s, std::nan("")));
}

TEST_CASE("closed-form flow matches RK4 integration") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3;
    const int n = 5;
    const Dataset x = gaussian(d, n, rng);
    const LabelSet y = real_labels(2, n, rng);
    const LinearModel w0{oracle::random_matrix(2, d, rng)};
    const Matrix& xv = x.values();
    const Matrix f = xv * xv.transpose();
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(f).eigenvalues().maxCoeff();
    const double t = 0.7 / lmax * (1 + trial);

    const FlowSolution plain = build_flow(x, y, w0, Preconditioner::none);
    const Matrix rk = oracle::rk4_flow(w0.W, xv, y.targets(), Matrix::Identity(d, d), t, 4000);
    CHECK(la::max_abs(flow_at(plain, t).W - rk) < 1e-6);

    const FlowSolution newton = build_flow(x, y, w0, Preconditioner::newton);
    const Matrix rkn = oracle::rk4_flow(w0.W, xv, y.targets(), f.inverse(), 1.3, 4000);
    CHECK(la::max_abs(flow_at(newton, 1.3).W - rkn) < 1e-6);
  }
}

TEST_CASE("rates") {
  std::mt19937_64 rng(34);
  const Dataset x = gaussian(5, 12, rng);
  const LabelSet y = real_labels(2, 12, rng);
  const FlowSolution plain = build_flow(x, y, LinearModel::zeros(2, 5), Preconditioner::none);
  CHECK(la::max_abs(plain.rates() - plain.spectrum().eigenvalues) < 1e-14);
  const FlowSolution newton = build_flow(x, y, LinearModel::zeros(2, 5), Preconditioner::newton);
  CHECK(la::max_abs(newton.rates() - Vector::Ones(5)) == 0.0);

  const Whitener w = fit_whitener(x, {WhitenMode::pca, RankPolicy::manual()});
  const FlowSolution white = build_flow(apply(w, x), y, LinearModel::zeros(2, 5), Preconditioner::none);
  CHECK(la::max_abs(white.rates() - Vector::Ones(5)) < 1e-8);

  const Dataset wide = gaussian(7, 3, rng);
  const FlowSolution sw = build_flow(wide, real_labels(1, 3, rng), LinearModel::zeros(1, 7), Preconditioner::newton);
  CHECK(sw.rates().head(3) == Vector::Ones(3));
  CHECK(sw.rates().tail(4) == Vector::Zero(4));
}

TEST_CASE("per-mode approach is monotone and ordered by eigenvalue") {
  std::mt19937_64 rng(35);
  const Dataset x = gaussian(4, 20, rng);
  const LabelSet y = real_labels(1, 20, rng);
  const LinearModel w0{oracle::random_matrix(1, 4, rng)};
  const FlowSolution s = build_flow(x, y, w0, Preconditioner::none);
  const Matrix init = s.init_modes();
  const Matrix star = s.star_modes();
  Vector prev = (init - star).cwiseAbs().transpose();
  const double lmax = s.rate_range().second;
  for (double t : {0.01, 0.05, 0.2, 1.0, 5.0, 100.0}) {
    const Vector dist = (s.modes_at(t) - star).cwiseAbs().transpose();
    for (int i = 0; i < 4; ++i) CHECK(dist(i) <= prev(i));
    const Vector rel = dist.cwiseQuotient((init - star).cwiseAbs().transpose());
    if (t * lmax < 30)
      for (int i = 1; i < 4; ++i) CHECK(rel(i - 1) < rel(i));
    prev = dist;
  }
}

TEST_CASE("null-space components never move") {
  std::mt19937_64 rng(36);
  const int d = 10;
  const int n = 4;
  const Dataset x = gaussian(d, n, rng);
  const LabelSet y = real_labels(2, n, rng);
  const LinearModel w0{oracle::random_matrix(2, d, rng)};
  for (Preconditioner p : {Preconditioner::none, Preconditioner::newton}) {
    const FlowSolution s = build_flow(x, y, w0, p);
    const Matrix v_null = s.spectrum().eigenvectors.rightCols(d - n);
    const Matrix base = w0.W * v_null;
    for (double t : {0.3, 2.0, 50.0}) {
      CHECK(la::max_abs(s.modes_at(t).rightCols(d - n) - s.init_modes().rightCols(d - n)) == 0.0);
      CHECK(la::max_abs(flow_at(s, t).W * v_null - base) < 1e-12);
    }
  }
}

TEST_CASE("Newton flow on raw data equals plain flow on whitened data") {
  std::mt19937_64 rng(37);
  const Dataset x = gaussian(6, 15, rng);
  const Dataset xt = gaussian(6, 5, rng, Split::test);
  const LabelSet y = real_labels(3, 15, rng);
  const Whitener w = fit_whitener(x, {WhitenMode::zca, RankPolicy::manual()});
  const Matrix m = w.transform();
  const LinearModel w0{oracle::random_matrix(3, 6, rng)};
  // Same initial predictions: W0_hat M = W0.
  const LinearModel w0_hat{w0.W * m.inverse()};
  const FlowSolution newton = build_flow(x, y, w0, Preconditioner::newton);
  const FlowSolution plain = build_flow(apply(w, x), y, w0_hat, Preconditioner::none);
  for (double t : {0.0, 0.05, 0.5, 1.0, 4.0, 30.0}) {
    CHECK(la::max_abs(newton.predict(x.values(), t) - plain.predict(apply(w, x).values(), t)) < 1e-8);
    CHECK(la::max_abs(newton.predict(xt.values(), t) - plain.predict(apply(w, xt).values(), t)) < 1e-8);
  }
}

TEST_CASE("converged predictions are whitening invariant for d < n") {
  std::mt19937_64 rng(38);
  const Dataset x = gaussian(5, 30, rng);
  const Dataset xt = gaussian(5, 8, rng, Split::test);
  const LabelSet y = one_hot(3, 30, rng);
  for (WhitenMode mode : {WhitenMode::pca, WhitenMode::zca}) {
    const Whitener w = fit_whitener(x, {mode, RankPolicy::jitter()});
    const Matrix raw = solve_optimum(x, y).model.predict(xt);
    const Matrix white = solve_optimum(apply(w, x), y).model.predict(apply(w, xt));
    CHECK(la::max_abs(raw - white) < 1e-6);
    const Matrix direct = normal_solution(x.values(), y.targets()) * xt.values();
    CHECK(la::max_abs(raw - direct) < 1e-8);
  }
}

TEST_CASE("optimum predictions from K alone") {
  std::mt19937_64 rng(39);
  for (auto [d, n] : {std::pair{4, 12}, std::pair{12, 4}, std::pair{6, 6}}) {
    const Dataset x = gaussian(d, n, rng);
    const Dataset xt = gaussian(d, 5, rng, Split::test);
    const LabelSet y = real_labels(2, n, rng);
    const LinearModel w0{0.3 * oracle::random_matrix(2, d, rng)};
    const PredictionResult k_form = optimum_predictions(x, y, xt, w0);
    const Matrix f_form = solve_optimum(x, y, w0).model.predict(xt);
    CAPTURE(d);
    CHECK(la::max_abs(k_form.predictions - f_form) < 1e-8);

    const FlowSolution s = build_flow(x, y, w0, Preconditioner::none);
    const double t_sat = 60.0 / s.rate_range().first;
    CHECK(la::max_abs(k_form.predictions - s.predict(xt.values(), t_sat)) < 1e-8);
  }

  const Dataset x = gaussian(3, 10, rng);
  const LabelSet y = real_labels(1, 10, rng);
  const Dataset col = x.columns(2, 1, Split::test);
  const Matrix fitted = solve_optimum(x, y).model.predict(x);
  CHECK(std::abs(optimum_predictions(x, y, col).predictions(0, 0) - fitted(0, 2)) < 1e-10);
}

TEST_CASE("fully whitened wide data predicts zero") {
  std::mt19937_64 rng(40);
  const int d = 40;
  const Dataset tr = gaussian(d, 20, rng);
  const Dataset te = gaussian(d, 10, rng, Split::test);
  const Dataset all = concatenate({&tr, &te});
  const Whitener w = fit_whitener(all, {WhitenMode::pca, RankPolicy::manual(), FitScope::full});
  const LabelSet y = one_hot(10, 20, rng);
  const LabelSet yt = one_hot(10, 10, rng);
  const Matrix pred = optimum_predictions(apply(w, tr), y, apply(w, te)).predictions;
  CHECK(la::max_abs(pred) < 1e-8);
  CHECK(std::abs(mse_per_sample(pred, yt.targets()) - 0.5) < 1e-8);
  CHECK(la::max_abs(solve_optimum(apply(w, tr), y).model.predict(apply(w, te))) < 1e-8);
}

TEST_CASE("early stopping") {
  SyntheticSpec spec;
  spec.d = 24;
  spec.n_train = 40;
  spec.n_val = 60;
  spec.n_test = 60;
  spec.label_noise = 1.0;
  spec.seed = 5;
  const SyntheticData data = synthesize(spec);
  const FlowSolution s =
      build_flow(data.train.x, data.train.y, LinearModel::zeros(spec.classes, spec.d), Preconditioner::none);
  TimeGrid grid;
  const EarlyStopResult r = early_stop(s, data.val, grid, &data.train, &data.test);

  CHECK(r.record.steps.size() == static_cast<size_t>(grid.points));
  const Matrix at = flow_at(s, r.t_star).predict(data.val.x);
  CHECK(std::abs(mse_per_sample(at, data.val.y.targets()) - r.val_loss) <= 1e-10);
  CHECK(r.record.best_time == r.t_star);

  // Dense oracle grid, 10x the resolution.
  const auto [rmin, rmax] = s.rate_range();
  const double lo = std::log(1e-3 / rmax);
  const double hi = std::log(40.0 / rmin);
  const int dense = 10 * grid.points;
  double best = INFINITY;
  double best_t = 0;
  const Matrix proj = s.project(data.val.x.values());
  for (int i = 0; i < dense; ++i) {
    const double t = std::exp(lo + (hi - lo) * i / (dense - 1));
    const double v = mse_per_sample(s.predict_projected(proj, t), data.val.y.targets());
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  if (best_t < std::exp(hi) * 0.999) {
    CHECK_FALSE(r.boundary_hit);
    CHECK(r.record.stopping_reason == "interior");
  }
  CHECK(r.val_loss <= best + 1e-12);

  // Validating on the training set itself: loss only decreases.
  // Short horizon so the decrease is resolvable in double precision.
  const TimeGrid short_grid{0.0, 4.0 / rmin, 50};
  const EarlyStopResult mono = early_stop(s, data.train, short_grid);
  CHECK(mono.boundary_hit);
  CHECK(mono.record.stopping_reason == "boundary");
  CHECK(mono.t_star == doctest::Approx(4.0 / rmin).epsilon(1e-12));
}
