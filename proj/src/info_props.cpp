#include "whitebench/info_props.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "whitebench/binary_io.hpp"
#include "whitebench/errors.hpp"
#include "whitebench/linear_flow.hpp"
#include "whitebench/synthetic.hpp"

namespace wb {

namespace {

constexpr double kMaxLeadingCondition = 1e8;
constexpr double kDegenerateCondition = 1e12;

double condition_number(const Matrix& block) {
  Eigen::JacobiSVD<Matrix> svd(block);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

CompressedDataset compress_whitened(const Dataset& xhat, double whiteness_tol) {
  const Eigen::Index d = xhat.feature_dim();
  const Eigen::Index n = xhat.sample_count();
  if (n < d) throw InputError("compression needs at least as many samples as features");
  const WhitenessReport w = verify_whitened(xhat, whiteness_tol);
  if (w.ones != d) throw InputError("compression needs fully whitened data (F = I)");

  const Matrix& x = xhat.values();
  CompressedDataset c;
  c.d = d;
  c.n = n;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
  Matrix block = x.leftCols(d);
  c.leading_condition = condition_number(block);
  if (!(c.leading_condition <= kMaxLeadingCondition)) {
    // Pick a well-conditioned identity block by column-pivoted QR.
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    const auto& perm = qr.colsPermutation().indices();
    std::vector<Eigen::Index> chosen(perm.data(), perm.data() + d);
    std::sort(chosen.begin(), chosen.end());
    std::vector<Eigen::Index> rest;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::binary_search(chosen.begin(), chosen.end(), j)) rest.push_back(j);
    }
    order = chosen;
    order.insert(order.end(), rest.begin(), rest.end());
    for (Eigen::Index j = 0; j < d; ++j) block.col(j) = x.col(order[static_cast<std::size_t>(j)]);
    c.leading_condition = condition_number(block);
    if (!(c.leading_condition <= kDegenerateCondition)) {
      throw DegenerateError("no invertible block of d columns (condition " +
                            std::to_string(c.leading_condition) + ")");
    }
    c.column_permutation = order;
  }

  Matrix rest(d, n - d);
  for (Eigen::Index j = d; j < n; ++j) rest.col(j - d) = x.col(order[static_cast<std::size_t>(j)]);
  c.payload = block.partialPivLu().solve(rest);
  return c;
}

Matrix reconstruct_K(const CompressedDataset& c) {
  if (c.payload.rows() != c.d || c.payload.cols() != c.n - c.d) {
    throw ShapeError("payload must be d x (n - d)");
  }
  Matrix tilde(c.d, c.n);
  tilde.leftCols(c.d).setIdentity();
  tilde.rightCols(c.n - c.d) = c.payload;
  const Matrix k = la::symmetrize(pseudoinverse(tilde) * tilde);
  if (c.column_permutation.empty()) return k;
  if (static_cast<Eigen::Index>(c.column_permutation.size()) != c.n) {
    throw ShapeError("column permutation must list all n columns");
  }
  Matrix out(c.n, c.n);
  for (Eigen::Index i = 0; i < c.n; ++i) {
    for (Eigen::Index j = 0; j < c.n; ++j) {
      out(c.column_permutation[static_cast<std::size_t>(i)],
          c.column_permutation[static_cast<std::size_t>(j)]) = k(i, j);
    }
  }
  return out;
}

std::int64_t count_information_parameters(std::int64_t d, std::int64_t n, bool whitened) {
  if (d < 1 || n < 1) throw InputError("d and n must be >= 1");
  if (whitened) {
    if (n < d) throw DomainError("whitened data with n < d has K = I; no free scalars remain");
    return (n - d) * d;
  }
  const std::int64_t de = std::min(d, n);
  return std::min(n * de - (de * de - de) / 2, (n * n + n) / 2);
}

void write_compressed(const CompressedDataset& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out.write("WBCD", 4);
  bin::write<std::uint16_t>(out, 1);
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(c.d));
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(c.n));
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(c.column_permutation.size()));
  for (Eigen::Index j : c.column_permutation) bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(j));
  bin::write_f64(out, c.leading_condition);
  for (Eigen::Index i = 0; i < c.payload.size(); ++i) bin::write_f64(out, c.payload.data()[i]);
  if (!out) throw InputError("failed writing " + path);
}

CompressedDataset read_compressed(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  bin::expect_magic(in, "WBCD", path);
  if (bin::read<std::uint16_t>(in, "version") != 1) throw ParseError(path + ": unsupported version");
  CompressedDataset c;
  c.d = bin::read<std::uint32_t>(in, "d");
  c.n = bin::read<std::uint32_t>(in, "n");
  if (c.d < 1 || c.n < c.d) throw ParseError(path + ": invalid dimensions");
  const auto perm = bin::read<std::uint32_t>(in, "permutation length");
  if (perm != 0 && perm != c.n) throw ParseError(path + ": permutation length must be 0 or n");
  for (std::uint32_t i = 0; i < perm; ++i) {
    const auto j = bin::read<std::uint32_t>(in, "permutation entry");
    if (j >= c.n) throw ParseError(path + ": permutation entry out of range");
    c.column_permutation.push_back(j);
  }
  c.leading_condition = bin::read_f64(in, "condition");
  c.payload.resize(c.d, c.n - c.d);
  for (Eigen::Index i = 0; i < c.payload.size(); ++i) c.payload.data()[i] = bin::read_f64(in, "payload");
  return c;
}

OrbitReport orbit_equivalence_check(const LabeledData& train, const Dataset& test, const Matrix& r,
                                    const OrbitConfig& cfg) {
  const Eigen::Index d = train.x.feature_dim();
  if (r.rows() != d || r.cols() != d) throw ShapeError("rotation must be d x d");
  if (la::max_abs(r.transpose() * r - Matrix::Identity(d, d)) > 1e-10) {
    throw InputError("R is not orthogonal within 1e-10");
  }
  if (test.feature_dim() != d) throw ShapeError("test features do not match training features");

  Mlp base = init_isotropic(cfg.model, cfg.init_variance, cfg.seed);
  Mlp rotated = base;
  rotated.weights(0) = base.weights(0) * r.transpose();

  const LabeledData rot_train(train.x.with_values(r * train.x.values()), train.y);
  const Matrix rot_test = r * test.values();

  struct Snapshot {
    Vector theta;
    Matrix first;
    Matrix z;
    Matrix pred;
  };
  auto deeper = [](const Mlp& m) {
    const Vector all = m.flatten();
    return Vector(all.tail(all.size() - m.weights(0).size()));
  };
  std::vector<Snapshot> a_traj;
  std::vector<Snapshot> b_traj;

  TrainOptions opts;
  opts.kind = OptimizerKind::sgd;
  opts.optimizer = cfg.optimizer;
  opts.cutoff = 1.0;
  opts.continue_after_cutoff = true;
  opts.max_steps = cfg.steps;
  opts.batch_seed = mix64(cfg.seed ^ 0xba7cULL);

  opts.observer = [&](long, const Mlp& m) {
    a_traj.push_back({deeper(m), m.weights(0), la::multiply(m.weights(0), train.x.values()),
                      forward(m, test.values()).predictions});
  };
  const TrainRecord ra = train_to_cutoff(base, train, nullptr, nullptr, opts);
  opts.observer = [&](long, const Mlp& m) {
    b_traj.push_back({deeper(m), m.weights(0) * r, la::multiply(m.weights(0), rot_train.x.values()),
                      forward(m, rot_test).predictions});
  };
  const TrainRecord rb = train_to_cutoff(rotated, rot_train, nullptr, nullptr, opts);

  OrbitReport rep;
  rep.tol = cfg.tol;
  if (a_traj.size() != b_traj.size() || ra.steps.size() != rb.steps.size()) {
    rep.max_deviation = std::numeric_limits<double>::infinity();
    return rep;
  }
  for (std::size_t i = 0; i < a_traj.size(); ++i) {
    if (a_traj[i].theta.size() > 0) {
      rep.theta_deviation = std::max(rep.theta_deviation, la::max_abs(a_traj[i].theta - b_traj[i].theta));
    }
    rep.first_layer_deviation = std::max(rep.first_layer_deviation, la::max_abs(a_traj[i].first - b_traj[i].first));
    rep.activation_deviation = std::max(rep.activation_deviation, la::max_abs(a_traj[i].z - b_traj[i].z));
    rep.prediction_deviation = std::max(rep.prediction_deviation, la::max_abs(a_traj[i].pred - b_traj[i].pred));
  }
  for (std::size_t i = 0; i < ra.steps.size(); ++i) {
    rep.loss_deviation = std::max(rep.loss_deviation, std::abs(ra.steps[i].train_loss - rb.steps[i].train_loss));
  }
  rep.max_deviation = std::max({rep.theta_deviation, rep.first_layer_deviation, rep.activation_deviation,
                                rep.loss_deviation, rep.prediction_deviation});
  rep.pass = std::isfinite(rep.max_deviation) && rep.max_deviation <= cfg.tol &&
             ra.stopping_reason == rb.stopping_reason;
  return rep;
}

NullReport full_whitening_null_check(int d, int n_train, int n_test, int classes, std::uint64_t seed,
                                     double tol) {
  if (n_train < 1 || n_test < 1 || n_train + n_test > d) {
    throw InputError("null check needs n_train + n_test <= d");
  }
  Rng rng(seed);
  const Matrix all = gaussian_matrix(d, n_train + n_test, 1.0, rng);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> cls(static_cast<std::size_t>(n_train + n_test));
  for (int& c : cls) c = pick(rng);

  const Dataset combined(all, Split::combined, "null-check");
  WhitenOptions opts;
  opts.mode = WhitenMode::pca;
  opts.policy = RankPolicy::manual();
  opts.scope = FitScope::full;
  const Whitener w = fit_whitener(combined, opts);
  const Dataset xtr = apply(w, combined.columns(0, n_train, Split::train));
  const Dataset xte = apply(w, combined.columns(n_train, n_test, Split::test));
  const LabelSet ytr = LabelSet::from_classes({cls.begin(), cls.begin() + n_train}, classes);
  const LabelSet yte = LabelSet::from_classes({cls.begin() + n_train, cls.end()}, classes);

  const Matrix k_route = optimum_predictions(xtr, ytr, xte).predictions;
  const Matrix f_route = solve_optimum(xtr, ytr).model.predict(xte);

  NullReport rep;
  rep.max_abs_prediction = std::max(la::max_abs(k_route), la::max_abs(f_route));
  rep.test_loss = mse_per_sample(k_route, yte.targets());
  // Values within tol of zero are ties; argmax then falls to class 0.
  const Matrix snapped = k_route.unaryExpr([tol](double v) { return std::abs(v) <= tol ? 0.0 : v; });
  rep.test_error = classification_error(snapped, yte);
  rep.tie_break_error = classification_error(Matrix::Zero(classes, n_test), yte);
  rep.pass = rep.max_abs_prediction <= tol && std::abs(rep.test_loss - 0.5) <= tol &&
             rep.test_error == rep.tie_break_error;
  return rep;
}

std::pair<double, double> binomial_interval(long trials, double p, double alpha) {
  if (trials < 1) throw InputError("need at least one trial");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("p must lie in [0, 1]");
  const double nt = static_cast<double>(trials);
  auto pmf = [&](long k) {
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == trials ? 1.0 : 0.0;
    const double kk = static_cast<double>(k);
    return std::exp(std::lgamma(nt + 1) - std::lgamma(kk + 1) - std::lgamma(nt - kk + 1) +
                    kk * std::log(p) + (nt - kk) * std::log1p(-p));
  };
  double cdf = 0.0;
  long lo = -1;
  long hi = trials;
  for (long k = 0; k <= trials; ++k) {
    cdf += pmf(k);
    if (lo < 0 && cdf >= alpha / 2) lo = k;
    if (cdf >= 1.0 - alpha / 2) {
      hi = k;
      break;
    }
  }
  return {static_cast<double>(std::max(lo, 0L)) / nt, static_cast<double>(hi) / nt};
}

ChanceReport full_whitening_mlp_chance_check(const MlpChanceConfig& cfg) {
  cfg.model.validate();
  const int d = cfg.model.layer_sizes.front();
  const int k = cfg.model.layer_sizes.back();
  if (cfg.n_train + cfg.n_test > d) throw InputError("chance check needs n_train + n_test <= d");
  if (cfg.seeds < 1) throw InputError("need at least one seed");

  ChanceReport rep;
  long wrong = 0;
  for (int s = 0; s < cfg.seeds; ++s) {
    const std::uint64_t run_seed = derive_seed(cfg.seed, "mlp-chance", cfg.n_train + cfg.n_test, "full", s);
    SyntheticSpec spec;
    spec.d = d;
    spec.n_train = cfg.n_train;
    spec.n_val = 1;
    spec.n_test = cfg.n_test;
    spec.classes = k;
    spec.seed = run_seed;
    const SyntheticData data = synthesize(spec);

    const Dataset combined = concatenate({&data.train.x, &data.test.x}, "full");
    WhitenOptions wopts;
    wopts.policy = RankPolicy::manual();
    wopts.scope = FitScope::full;
    const Whitener w = fit_whitener(combined, wopts);
    const LabeledData train(apply(w, data.train.x), data.train.y);
    const LabeledData test(apply(w, data.test.x), data.test.y);

    const double variance = cfg.init_variance > 0.0 ? cfg.init_variance : 1.0 / static_cast<double>(d);
    Mlp model = init_isotropic(cfg.model, variance, mix64(run_seed));
    TrainOptions opts;
    opts.optimizer = cfg.optimizer;
    opts.cutoff = cfg.cutoff;
    opts.max_steps = cfg.max_steps;
    opts.batch_seed = mix64(run_seed ^ 0xba7cULL);
    train_to_cutoff(model, train, nullptr, nullptr, opts);

    const double err = classification_error(forward(model, test.x.values()).predictions, test.y);
    rep.errors.push_back(err);
    wrong += std::lround(err * cfg.n_test);
  }
  rep.trials = static_cast<long>(cfg.seeds) * cfg.n_test;
  rep.mean_error = static_cast<double>(wrong) / static_cast<double>(rep.trials);
  std::tie(rep.lower, rep.upper) = binomial_interval(rep.trials, 1.0 - 1.0 / k);
  rep.pass = rep.mean_error >= rep.lower && rep.mean_error <= rep.upper;
  return rep;
}

}  // namespace wb
