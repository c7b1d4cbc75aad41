// Acceptance battery: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "oracles.hpp"
#include "whitebench/data_model.hpp"
#include "whitebench/harness/config.hpp"
#include "whitebench/harness/experiment.hpp"
#include "whitebench/harness/io.hpp"
#include "whitebench/info_props.hpp"
#include "whitebench/iterative_opt.hpp"
#include "whitebench/linear_flow.hpp"
#include "whitebench/models.hpp"
#include "whitebench/whitening.hpp"

using namespace wb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

LabeledData random_problem(int d, int n, int classes, std::mt19937_64& rng, Split split = Split::train) {
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::vector<int> cls(static_cast<std::size_t>(n));
  for (int& c : cls) c = pick(rng);
  return LabeledData(Dataset(oracle::random_matrix(d, n, rng), split), LabelSet::from_classes(cls, classes));
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "whitebench_acceptance";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<ResultRow> run_text(const std::string& text) {
  ConfigFile c = ConfigFile::parse(text);
  RunConfig cfg = RunConfig::from_config(c);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return sweep(cfg, static_cast<int>(hw));
}

// 1 ----------------------------------------------------------------------
Outcome null_prediction() {
  double worst_pred = 0;
  double worst_loss = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NullReport r = full_whitening_null_check(64, 32, 16, 10, seed);
    worst_pred = std::max(worst_pred, r.max_abs_prediction);
    worst_loss = std::max(worst_loss, std::abs(r.test_loss - 0.5));
  }
  return {worst_pred <= 1e-8 && worst_loss <= 1e-8,
          fmt("max |f(X_test)| = %.2e, max |loss - 0.5| = %.2e over 5 seeds", worst_pred, worst_loss)};
}

// 2 ----------------------------------------------------------------------
Outcome chance_level() {
  MlpChanceConfig cfg;
  cfg.model.layer_sizes = {64, 32, 32, 10};
  cfg.n_train = 48;
  cfg.n_test = 16;
  cfg.seeds = 10;
  cfg.optimizer.eta = 0.5;
  cfg.max_steps = 1500;
  cfg.seed = 20;
  const ChanceReport r = full_whitening_mlp_chance_check(cfg);
  // Independent interval: smallest central range with >= 95% Binomial(N, 0.9) mass.
  const boost::math::binomial_distribution<double> b(static_cast<double>(r.trials), 0.9);
  long lo = 0;
  while (boost::math::cdf(b, static_cast<double>(lo)) <= 0.025) ++lo;
  long hi = r.trials;
  while (hi > 0 && boost::math::cdf(boost::math::complement(b, static_cast<double>(hi - 1))) <= 0.025) --hi;
  const double lo_rate = static_cast<double>(lo) / static_cast<double>(r.trials);
  const double hi_rate = static_cast<double>(hi) / static_cast<double>(r.trials);
  const bool inside = r.mean_error >= lo_rate && r.mean_error <= hi_rate;
  return {inside && r.trials == 160,
          fmt("mean test error %.4f over %ld predictions, 95%% range [%.4f, %.4f]", r.mean_error, r.trials, lo_rate,
              hi_rate)};
}

// 3 ----------------------------------------------------------------------
Outcome newton_equivalence() {
  std::mt19937_64 rng(303);
  const int d = 32;
  const LabeledData train = random_problem(d, 256, 10, rng);
  const Dataset test(oracle::random_matrix(d, 64, rng), Split::test);
  const Whitener w = fit_whitener(train.x, {WhitenMode::pca, RankPolicy::manual()});
  const Dataset xh = apply(w, train.x);
  const Dataset th = apply(w, test);
  LinearModel raw{oracle::random_matrix(10, d, rng, 0.2)};
  // Matched initial outputs: W_hat M = W.
  Matrix wh = raw.W * w.transform().inverse();
  double worst = std::max(la::max_abs(raw.predict(train.x) - wh * xh.values()),
                          la::max_abs(raw.predict(test) - wh * th.values()));
  OptimizerConfig cfg;
  cfg.eta = 0.3;
  const LinearObjective white(xh, train.y);
  Vector p = LinearObjective::flatten(wh);
  for (int step = 0; step < 100; ++step) {
    raw = newton_step(raw, train.x, train.y, cfg).model;
    p = sgd_step(p, white, cfg).params;
    wh = white.unflatten(p);
    worst = std::max(worst, la::max_abs(raw.predict(train.x) - wh * xh.values()));
    worst = std::max(worst, la::max_abs(raw.predict(test) - wh * th.values()));
  }
  return {worst <= 1e-10, fmt("max per-step train/test prediction deviation %.2e over 100 steps", worst)};
}

// 4 ----------------------------------------------------------------------
Outcome orbit() {
  std::mt19937_64 rng(404);
  const int d = 12;
  const LabeledData train = random_problem(d, 30, 4, rng);
  const Dataset test(oracle::random_matrix(d, 10, rng), Split::test);
  double worst_linear = 0;
  double worst_mlp = 0;
  std::uniform_int_distribution<long> steps(20, 50);
  for (int trial = 0; trial < 100; ++trial) {
    OrbitConfig lin;
    lin.model.layer_sizes = {d, 4};
    lin.optimizer.eta = 0.02;
    lin.init_variance = 1.0 / d;
    lin.steps = steps(rng);
    lin.tol = 1e-10;
    lin.seed = static_cast<std::uint64_t>(trial);
    const OrbitReport lr = orbit_equivalence_check(train, test, oracle::random_orthogonal(d, rng), lin);
    worst_linear = std::max(worst_linear, lr.max_deviation);

    OrbitConfig mlp = lin;
    mlp.model.layer_sizes = {d, 16, 16, 4};
    mlp.model.activation = trial % 2 == 0 ? Activation::relu : Activation::tanh;
    mlp.model.head = trial % 3 == 0 ? OutputHead::softmax_xent : OutputHead::linear_mse;
    mlp.model.hidden_bias = trial % 4 == 0;
    mlp.optimizer.eta = 0.05;
    mlp.optimizer.batch_size = trial % 2 == 0 ? 8 : 0;
    mlp.steps = steps(rng);
    mlp.tol = 1e-8;
    const OrbitReport mr = orbit_equivalence_check(train, test, oracle::random_orthogonal(d, rng), mlp);
    worst_mlp = std::max(worst_mlp, mr.max_deviation);
  }
  return {worst_linear <= 1e-10 && worst_mlp <= 1e-8,
          fmt("100 rotations each: linear max deviation %.2e, MLP max deviation %.2e", worst_linear, worst_mlp)};
}

// 5 ----------------------------------------------------------------------
Outcome compression() {
  std::mt19937_64 rng(505);
  double worst = 0;
  long bad_sizes = 0;
  long cases = 0;
  for (int d = 2; d <= 5; ++d) {
    for (int n = d + 1; n <= d + 6; ++n) {
      for (int seed = 0; seed < 10; ++seed) {
        const Dataset x(oracle::random_matrix(d, n, rng), Split::train);
        const Dataset xh = apply(fit_whitener(x, {WhitenMode::pca, RankPolicy::manual()}), x);
        const CompressedDataset c = compress_whitened(xh);
        const Matrix k = xh.values().transpose() * xh.values();  // direct Gram, not the library's
        worst = std::max(worst, (reconstruct_K(c) - k).cwiseAbs().maxCoeff());
        if (c.stored_scalars() != static_cast<Eigen::Index>((n - d) * d)) ++bad_sizes;
        ++cases;
      }
    }
  }
  return {worst <= 1e-8 && bad_sizes == 0,
          fmt("%ld datasets: max |K_rec - K| = %.2e, %ld payload size mismatches", cases, worst, bad_sizes)};
}

// 6 ----------------------------------------------------------------------
Matrix rk4(Matrix w, const Matrix& x, const Matrix& y, const Matrix& precond, double t, double h) {
  const auto rhs = [&](const Matrix& v) -> Matrix { return -((v * x - y) * x.transpose()) * precond; };
  const long steps = static_cast<long>(std::ceil(t / h));
  if (steps == 0) return w;
  const double dt = t / static_cast<double>(steps);
  for (long s = 0; s < steps; ++s) {
    const Matrix k1 = rhs(w);
    const Matrix k2 = rhs(w + 0.5 * dt * k1);
    const Matrix k3 = rhs(w + 0.5 * dt * k2);
    const Matrix k4 = rhs(w + dt * k3);
    w += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return w;
}

Outcome flow_vs_ode() {
  std::mt19937_64 rng(606);
  double worst = 0;
  for (int problem = 0; problem < 5; ++problem) {
    const Matrix x = oracle::random_matrix(3, 5, rng);
    const Matrix y = oracle::random_matrix(2, 5, rng);
    const Matrix w0 = oracle::random_matrix(2, 3, rng);
    const Matrix f = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(f);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    const Dataset ds(x, Split::train);
    const LabelSet ls(y, LabelEncoding::real_valued);
    for (const Preconditioner pc : {Preconditioner::none, Preconditioner::newton}) {
      const Matrix p = pc == Preconditioner::none ? Matrix::Identity(3, 3) : Matrix(f.inverse());
      const double fastest = pc == Preconditioner::none ? lmax : 1.0;
      const double slowest = pc == Preconditioner::none ? lmin : 1.0;
      const FlowSolution sol = build_flow(ds, ls, LinearModel{w0}, pc);
      std::uniform_real_distribution<double> pick(0.0, 6.0 / slowest);
      std::vector<double> times(20);
      for (double& t : times) t = pick(rng);
      std::sort(times.begin(), times.end());
      Matrix w = w0;
      double at = 0;
      for (double t : times) {
        w = rk4(w, x, y, p, t - at, 0.01 / fastest);
        at = t;
        worst = std::max(worst, (flow_at(sol, t).W - w).cwiseAbs().maxCoeff());
      }
    }
  }
  return {worst <= 1e-6, fmt("max |W_closed(t) - W_rk4(t)| = %.2e at 20 times x 5 problems x 2 flows", worst)};
}

// 7 ----------------------------------------------------------------------
std::map<std::pair<long, std::string>, std::vector<double>> by_cell(const std::vector<ResultRow>& rows,
                                                                    double ResultRow::*field) {
  std::map<std::pair<long, std::string>, std::vector<double>> out;
  for (const ResultRow& r : rows) {
    if (!r.terminal()) continue;
    auto& v = out[{r.dataset_size, r.whitening_mode}];
    if (v.size() <= static_cast<std::size_t>(r.seed)) v.resize(static_cast<std::size_t>(r.seed) + 1, NAN);
    v[static_cast<std::size_t>(r.seed)] = r.*field;
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome generalization_direction() {
  const auto rows = run_text(R"(
[experiment]
id = generalization
kind = linear_flow
master_seed = 7001
seeds = 10
sizes = 16, 32, 64, 128, 256, 512, 1024
size_convention = joint

[data]
d = 64
alpha = 2
label_noise = 0.1
classes = 10
holdout = 256

[whitening]
arms = none, train, full
rank_policy = manual
)");
  const auto cells = by_cell(rows, &ResultRow::test_loss);
  bool ordered = true;
  bool chance = true;
  long wins = 0;
  long losses = 0;
  std::string per_size;
  for (long n : {16L, 32L, 64L, 128L, 256L, 512L, 1024L}) {
    const auto& none = cells.at({n, "none"});
    const auto& train = cells.at({n, "train"});
    const auto& full = cells.at({n, "full"});
    ordered = ordered && mean(none) <= mean(train);
    for (std::size_t s = 0; s < none.size(); ++s) {
      if (none[s] < train[s]) ++wins;
      if (none[s] > train[s]) ++losses;
      if (n <= 64 && !(std::abs(full[s] - 0.5) <= 1e-8)) chance = false;
    }
    per_size += fmt(" %ld:%.3f/%.3f", n, mean(none), mean(train));
  }
  // One-sided sign test over all paired (size, seed) cells, ties dropped.
  const boost::math::binomial_distribution<double> null(static_cast<double>(wins + losses), 0.5);
  const double p = wins == 0 ? 1.0 : boost::math::cdf(boost::math::complement(null, static_cast<double>(wins - 1)));
  return {ordered && chance && p < 0.05,
          fmt("mean test loss none/train per size:%s; sign test %ld-%ld, p = %.2e; full at 0.5 for n <= d: %s",
              per_size.c_str(), wins, losses, p, chance ? "yes" : "no")};
}

// 8 ----------------------------------------------------------------------
const char* kSpeedBase = R"(
[experiment]
id = speed
kind = mlp
master_seed = 8001
seeds = 5
sizes = 32, 64, 128, 256

[data]
d = 64
alpha = 2
label_noise = 0.1
classes = 10
n_val = 64
n_test = 64

[model]
hidden = 32, 32
reduction = sum

[stopping]
cutoff = 0.999
max_steps = 2000
)";

Outcome speedup_direction() {
  const auto gd = run_text(std::string(kSpeedBase) +
                           "[whitening]\narms = none, train\n[optimizer]\nkind = sgd\neta = 1\nline_search = true\n");
  std::map<std::pair<long, long>, std::map<std::string, double>> cutoff;
  for (const ResultRow& r : gd) {
    if (!r.terminal()) continue;
    cutoff[{r.dataset_size, r.seed}][r.whitening_mode] =
        r.steps_to_cutoff >= 0 ? static_cast<double>(r.steps_to_cutoff) : INFINITY;
  }
  long white_faster = 0;
  for (const auto& [cell, v] : cutoff) white_faster += v.at("train") < v.at("none") ? 1 : 0;

  const auto gn = run_text(std::string(kSpeedBase) +
                           "[whitening]\narms = none\n[optimizer]\nkind = regularized_gn\nlambdas = 0.1, 0.5, 1\n"
                           "eta = 1\nline_search = true\n");
  std::map<std::pair<long, long>, std::map<std::string, double>> best;
  for (const ResultRow& r : gn) {
    if (r.terminal()) best[{r.dataset_size, r.seed}][r.optimizer] = r.step_or_time;
  }
  long gn_faster = 0;
  for (const auto& [cell, v] : best) {
    const double gd_best = v.at("regularized_gn:lambda=1");
    gn_faster += v.at("regularized_gn:lambda=0.1") < gd_best && v.at("regularized_gn:lambda=0.5") < gd_best ? 1 : 0;
  }
  const double a = static_cast<double>(white_faster) / static_cast<double>(cutoff.size());
  const double b = static_cast<double>(gn_faster) / static_cast<double>(best.size());
  return {cutoff.size() == 20 && best.size() == 20 && a >= 0.8 && b >= 0.8,
          fmt("whitened GD reaches cutoff first in %ld/%zu cells; GN (lambda 0.1, 0.5) reaches best val before GD "
              "in %ld/%zu cells",
              white_faster, cutoff.size(), gn_faster, best.size())};
}

// 9 ----------------------------------------------------------------------
Outcome gn_endpoints() {
  std::mt19937_64 rng(909);
  double step_gd = 0;
  double step_gn = 0;
  double eig_form = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const LabeledData data = random_problem(6, 40, 3, rng);
    const LinearObjective obj(data.x, data.y);
    const Vector p0 = LinearObjective::flatten(oracle::random_matrix(3, 6, rng));
    OptimizerConfig cfg;
    cfg.eta = 0.01;
    cfg.cg_tol = 1e-13;
    cfg.reg_lambda = 1.0;
    step_gd = std::max(step_gd, la::max_abs(regularized_gn_step(p0, obj, cfg).params - sgd_step(p0, obj, cfg).params));

    // lambda = 0 against a dense solve of the exact Gauss-Newton system.
    cfg.reg_lambda = 0.0;
    const Eigen::Index dim = obj.dimension();
    Matrix b(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) b.col(j) = obj.curvature_product(p0, Vector::Unit(dim, j));
    const Vector dense = p0 - cfg.eta * b.ldlt().solve(obj.gradient(p0));
    step_gn = std::max(step_gn, la::max_abs(regularized_gn_step(p0, obj, cfg).params - dense));

    // Small MLP: dense GGN assembled column by column.
    MlpConfig mc;
    mc.layer_sizes = {4, 3, 2};
    mc.activation = Activation::tanh;
    const Mlp model = init_isotropic(mc, 0.5, static_cast<std::uint64_t>(trial + 1));
    const MlpObjective mobj(model, oracle::random_matrix(4, 30, rng), oracle::random_matrix(2, 30, rng));
    const Vector q0 = model.flatten();
    const Eigen::Index md = mobj.dimension();
    Matrix g(md, md);
    for (Eigen::Index j = 0; j < md; ++j) g.col(j) = mobj.curvature_product(q0, Vector::Unit(md, j));
    OptimizerConfig mcfg;
    mcfg.eta = 0.1;
    mcfg.cg_tol = 1e-14;
    mcfg.cg_max_iter = 10000;
    mcfg.reg_lambda = 0.0;
    const Vector mdense = q0 - mcfg.eta * g.ldlt().solve(mobj.gradient(q0));
    step_gn = std::max(step_gn, la::max_abs(regularized_gn_step(q0, mobj, mcfg).params - mdense));
    mcfg.reg_lambda = 1.0;
    step_gd = std::max(step_gd, la::max_abs(regularized_gn_step(q0, mobj, mcfg).params - sgd_step(q0, mobj, mcfg).params));
  }
  for (int size : {2, 5, 16, 33, 64}) {
    const Matrix q = oracle::random_orthogonal(size, rng);
    Vector mu(size);
    std::uniform_real_distribution<double> spread(0.05, 20.0);
    for (int i = 0; i < size; ++i) mu(i) = spread(rng);
    mu(0) = 0.0;  // PSD, singular
    const Matrix b = q * mu.asDiagonal() * q.transpose();
    for (double lambda : {0.05, 0.3, 0.7, 1.0}) {
      const Matrix dense = ((1 - lambda) * b + lambda * Matrix::Identity(size, size)).partialPivLu().inverse();
      eig_form = std::max(eig_form, la::max_abs(regularized_preconditioner(b, lambda) - dense));
    }
  }
  return {step_gd <= 1e-10 && step_gn <= 1e-10 && eig_form <= 1e-8,
          fmt("lambda=1 vs gradient step %.2e; lambda=0 vs dense GN %.2e; eigen form vs dense inverse %.2e", step_gd,
              step_gn, eig_form)};
}

// 10 ---------------------------------------------------------------------
Outcome gradients() {
  std::mt19937_64 rng(1010);
  double worst = 0;
  int configs = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> width(2, 7);
    std::uniform_int_distribution<int> depth(0, 3);
    MlpConfig mc;
    const int d = width(rng);
    mc.layer_sizes.push_back(d);
    for (int h = depth(rng); h > 0; --h) mc.layer_sizes.push_back(width(rng));
    const int k = width(rng);
    mc.layer_sizes.push_back(k);
    mc.activation = trial % 2 == 0 ? Activation::tanh : Activation::relu;
    mc.head = (trial / 2) % 2 == 0 ? OutputHead::linear_mse : OutputHead::softmax_xent;
    mc.hidden_bias = (trial / 4) % 2 == 1;
    mc.reduction = (trial / 8) % 2 == 0 ? Reduction::mean : Reduction::sum;
    const int n = width(rng) + 3;
    Matrix y;
    if (mc.head == OutputHead::softmax_xent) {
      std::vector<int> cls(static_cast<std::size_t>(n));
      for (int& c : cls) c = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
      y = LabelSet::from_classes(cls, k).targets();
    } else {
      y = oracle::random_matrix(k, n, rng);
    }
    const Mlp model = init_isotropic(mc, 0.6, rng());
    Mlp shape = model;
    for (int l = 0; l < shape.layer_count(); ++l)
      if (shape.has_bias(l)) shape.bias(l) = oracle::random_matrix(shape.bias(l).size(), 1, rng, 0.3);
    const MlpObjective obj(shape, oracle::random_matrix(d, n, rng), y);
    const Vector p = shape.flatten();
    const Vector g = obj.gradient(p);
    Vector fd(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(p(i)));
      Vector a = p;
      Vector b = p;
      a(i) += h;
      b(i) -= h;
      fd(i) = (obj.value(a) - obj.value(b)) / (2 * h);
    }
    worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-12));
    ++configs;
  }
  // The linear least-squares objective as a twenty-first pairing.
  const LabeledData data = random_problem(5, 9, 3, rng);
  const LinearObjective lin(data.x, data.y);
  const Vector p = LinearObjective::flatten(oracle::random_matrix(3, 5, rng));
  const Vector g = lin.gradient(p);
  Vector fd(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Vector a = p;
    Vector b = p;
    a(i) += 1e-6;
    b(i) -= 1e-6;
    fd(i) = (lin.value(a) - lin.value(b)) / 2e-6;
  }
  worst = std::max(worst, (fd - g).norm() / g.norm());
  return {worst <= 1e-4, fmt("%d MLP configurations + linear: max relative FD error %.2e", configs, worst)};
}

// 11 ---------------------------------------------------------------------
int run_cli(const std::string& args) {
  const std::string cmd = std::string(WB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism_interop() {
  const fs::path dir = scratch_dir();
  const int verify_code = run_cli("verify --suite all --report " + (dir / "verify.json").string());

  std::ofstream(dir / "sweep.ini") << "[experiment]\nid = repeat\nkind = linear_flow\nmaster_seed = 11\nseeds = 3\n"
                                      "sizes = 16, 48, 96\n[data]\nd = 32\nclasses = 5\nn_val = 40\nn_test = 40\n"
                                      "[whitening]\narms = none, train, full\n";
  std::ofstream(dir / "mlp.ini") << "[experiment]\nid = repeat_mlp\nkind = mlp\nseeds = 2\nsizes = 24, 48\n"
                                    "[data]\nd = 16\nclasses = 3\nn_val = 16\nn_test = 16\n[whitening]\narms = none, train\n"
                                    "[model]\nhidden = 8\n[optimizer]\nkind = sgd\neta = 0.5\nbatch_size = 8\n"
                                    "[stopping]\nmax_steps = 200\n";
  const int s1 = run_cli("sweep --config " + (dir / "sweep.ini").string() + " --workers 1 --output " +
                         (dir / "a.csv").string());
  const int s2 = run_cli("sweep --config " + (dir / "sweep.ini").string() + " --workers 3 --output " +
                         (dir / "b.csv").string());
  const int s3 = run_cli("sweep --config " + (dir / "mlp.ini").string() + " --workers 1 --output " +
                         (dir / "c.csv").string());
  const int s4 = run_cli("sweep --config " + (dir / "mlp.ini").string() + " --workers 2 --output " +
                         (dir / "d.csv").string());
  const std::string a = slurp(dir / "a.csv");
  const std::string c = slurp(dir / "c.csv");
  const bool sweeps_equal =
      s1 == 0 && s2 == 0 && s3 == 0 && s4 == 0 && !a.empty() && !c.empty() && a == slurp(dir / "b.csv") && c == slurp(dir / "d.csv");

  std::mt19937_64 rng(1111);
  bool wbds_exact = true;
  for (auto [d, n] : {std::pair{1, 1}, std::pair{3, 7}, std::pair{64, 200}}) {
    Matrix m = oracle::random_matrix(d, n, rng, 1e3);
    m(0, 0) = -0.0;
    if (m.size() > 2) {
      m(m.size() - 1) = 4.9e-324;
      m(1) = -1.7976931348623157e308;
    }
    const fs::path p = dir / "rt.wbds";
    io::write_wbds(m, p.string());
    const std::string bytes = slurp(p);
    const Matrix back = io::read_wbds(p.string());
    io::write_wbds(back, (dir / "rt2.wbds").string());
    wbds_exact = wbds_exact && back.rows() == d && back.cols() == n &&
                 std::memcmp(back.data(), m.data(), sizeof(double) * static_cast<std::size_t>(m.size())) == 0 &&
                 slurp(dir / "rt2.wbds") == bytes && bytes.size() == 14 + 8 * static_cast<std::size_t>(d * n);
  }
  return {verify_code == 0 && sweeps_equal && wbds_exact,
          fmt("verify exit %d; repeated sweeps byte-identical: %s; wbds bit-exact: %s", verify_code,
              sweeps_equal ? "yes" : "no", wbds_exact ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "null-prediction exactness", 1, null_prediction},
      {2, "chance-level classification", 60, chance_level},
      {3, "Newton equals whitened GD", 5, newton_equivalence},
      {4, "orbit equivalence", 120, orbit},
      {5, "compression round trip", 10, compression},
      {6, "closed-form flow vs RK4", 10, flow_vs_ode},
      {7, "generalization direction", 300, generalization_direction},
      {8, "speedup direction", 600, speedup_direction},
      {9, "regularized GN endpoints", 5, gn_endpoints},
      {10, "gradient correctness", 30, gradients},
      {11, "determinism and interop", 600, determinism_interop},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.2fs of %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
