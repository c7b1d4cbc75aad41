#include "whitebench/harness/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "whitebench/errors.hpp"
#include "whitebench/info_props.hpp"
#include "whitebench/iterative_opt.hpp"
#include "whitebench/linalg.hpp"
#include "whitebench/linear_flow.hpp"
#include "whitebench/random.hpp"
#include "whitebench/whitening.hpp"

namespace wb {

VerifySuite parse_verify_suite(const std::string& s) {
  if (s == "orbit") return VerifySuite::orbit;
  if (s == "compression") return VerifySuite::compression;
  if (s == "newton-equivalence") return VerifySuite::newton_equivalence;
  if (s == "null-prediction") return VerifySuite::null_prediction;
  if (s == "all") return VerifySuite::all;
  throw InputError("unknown verify suite \"" + s +
                   "\" (expected orbit, compression, newton-equivalence, null-prediction or all)");
}

const char* to_string(VerifySuite s) {
  switch (s) {
    case VerifySuite::orbit: return "orbit";
    case VerifySuite::compression: return "compression";
    case VerifySuite::newton_equivalence: return "newton-equivalence";
    case VerifySuite::null_prediction: return "null-prediction";
    case VerifySuite::all: return "all";
  }
  return "?";
}

bool VerifyReport::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

std::string VerifyReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass();
  j["checks"] = nlohmann::ordered_json::array();
  long failed = 0;
  for (const VerifyCheck& c : checks) {
    failed += c.pass ? 0 : 1;
    j["checks"].push_back({{"suite", c.suite},
                           {"name", c.name},
                           {"pass", c.pass},
                           {"value", c.value},
                           {"threshold", c.threshold},
                           {"detail", c.detail}});
  }
  j["failed"] = failed;
  return j.dump(2) + "\n";
}

namespace {

std::string label(const char* fmt, int a, int b, std::uint64_t c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, fmt, a, b, static_cast<unsigned long long>(c));
  return buf;
}

LabeledData gaussian_problem(int d, int n, int classes, Rng& rng, Split split) {
  Matrix x = gaussian_matrix(d, n, 1.0, rng);
  std::vector<int> cls(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cls[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
  return LabeledData(Dataset(std::move(x), split), LabelSet::from_classes(cls, classes));
}

void orbit_suite(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  Rng rng(mix64(seed ^ 0x0b17));
  const int d = 10;
  const LabeledData train = gaussian_problem(d, 24, 3, rng, Split::train);
  const Dataset test(gaussian_matrix(d, 8, 1.0, rng), Split::test);

  struct Case {
    const char* name;
    std::vector<int> layers;
    Activation act;
    long batch;
  };
  const Case cases[] = {{"linear", {d, 3}, Activation::relu, 0},
                        {"mlp_relu_sgd", {d, 16, 3}, Activation::relu, 6},
                        {"mlp_tanh_gd", {d, 12, 12, 3}, Activation::tanh, 0}};
  for (const Case& c : cases) {
    OrbitConfig cfg;
    cfg.model.layer_sizes = c.layers;
    cfg.model.activation = c.act;
    cfg.optimizer.eta = 0.05;
    cfg.optimizer.batch_size = c.batch;
    cfg.init_variance = 1.0 / d;
    cfg.steps = 25;
    cfg.seed = mix64(seed + 17);
    const Matrix r = random_orthogonal(d, rng);
    const OrbitReport rep = orbit_equivalence_check(train, test, r, cfg);
    out.push_back({"orbit", c.name, rep.pass, rep.max_deviation, rep.tol,
                   "max over deeper weights, first-layer orbit, activations, loss and predictions"});
  }
}

void compression_suite(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  Rng rng(mix64(seed ^ 0xc0de));
  const std::pair<int, int> shapes[] = {{2, 3}, {4, 4}, {8, 20}, {16, 40}, {32, 33}};
  for (auto [d, n] : shapes) {
    const Dataset x(gaussian_matrix(d, n, 1.0, rng), Split::train);
    const Whitener w = fit_whitener(x, {WhitenMode::zca, RankPolicy::manual()});
    const Dataset xh = apply(w, x);
    const Matrix k = la::gram(xh.values());
    const CompressedDataset c = compress_whitened(xh);
    const double err = la::max_abs(reconstruct_K(c) - k);
    const bool sized = c.stored_scalars() == count_information_parameters(d, n, true);
    VerifyCheck chk{"compression", label("d=%d n=%d", d, n, 0), err <= 1e-9 && sized, err, 1e-9,
                    sized ? "payload matches the whitened parameter count" : "payload size differs from the count"};
    out.push_back(chk);
  }
}

void newton_suite(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  Rng rng(mix64(seed ^ 0x4e77));
  const int d = 6;
  const int n = 20;
  const LabeledData train = gaussian_problem(d, n, 3, rng, Split::train);
  const Dataset test(gaussian_matrix(d, 7, 1.0, rng), Split::test);
  const Whitener w = fit_whitener(train.x, {WhitenMode::zca, RankPolicy::manual()});
  const Dataset xh = apply(w, train.x);
  const Dataset th = apply(w, test);
  const LinearModel w0{gaussian_matrix(3, d, 0.3, rng)};
  const LinearModel w0h{w0.W * w.transform().inverse()};

  // Continuous time: Newton flow on X against plain flow on the whitened data.
  const FlowSolution newton = build_flow(train.x, train.y, w0, Preconditioner::newton);
  const FlowSolution plain = build_flow(xh, train.y, w0h, Preconditioner::none);
  double flow_dev = 0;
  for (double t : {0.0, 0.1, 0.5, 1.0, 3.0, 10.0}) {
    flow_dev = std::max(flow_dev, la::max_abs(newton.predict(train.x.values(), t) - plain.predict(xh.values(), t)));
    flow_dev = std::max(flow_dev, la::max_abs(newton.predict(test.values(), t) - plain.predict(th.values(), t)));
  }
  out.push_back({"newton-equivalence", "flow", flow_dev <= 1e-8, flow_dev, 1e-8,
                 "Newton flow on raw inputs vs gradient flow on whitened inputs"});

  // Discrete steps: Newton updates against gradient descent on whitened data.
  OptimizerConfig cfg;
  cfg.eta = 0.05;
  const LinearObjective white(xh, train.y);
  LinearModel raw = w0;
  Vector p = LinearObjective::flatten(w0h.W);
  double step_dev = 0;
  for (int s = 0; s < 100; ++s) {
    raw = newton_step(raw, train.x, train.y, cfg).model;
    p = sgd_step(p, white, cfg).params;
    const Matrix wh = white.unflatten(p);
    step_dev = std::max(step_dev, la::max_abs(raw.predict(train.x) - wh * xh.values()));
    step_dev = std::max(step_dev, la::max_abs(raw.predict(test) - wh * th.values()));
  }
  out.push_back({"newton-equivalence", "discrete_100_steps", step_dev <= 1e-10, step_dev, 1e-10,
                 "Newton steps on raw inputs vs gradient steps on whitened inputs"});
}

void null_suite(std::uint64_t seed, std::vector<VerifyCheck>& out) {
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const NullReport r = full_whitening_null_check(64, 32, 16, 10, mix64(seed + s));
    out.push_back({"null-prediction", label("linear d=%d n=%d seed=%llu", 64, 48, s), r.pass, r.max_abs_prediction,
                   1e-8, r.test_error == r.tie_break_error ? "test error equals the tie-break error" : "error differs"});
  }
  MlpChanceConfig cfg;
  cfg.model.layer_sizes = {48, 16, 4};
  cfg.n_train = 24;
  cfg.n_test = 24;
  cfg.seeds = 5;
  cfg.optimizer.eta = 0.5;
  cfg.max_steps = 400;
  cfg.seed = mix64(seed + 99);
  const ChanceReport c = full_whitening_mlp_chance_check(cfg);
  char detail[128];
  std::snprintf(detail, sizeof detail, "95%% binomial range [%.4f, %.4f] over %ld test predictions", c.lower, c.upper,
                c.trials);
  out.push_back({"null-prediction", "mlp_chance", c.pass, c.mean_error, 0.75, detail});
}

}  // namespace

VerifyReport run_verify(VerifySuite suite, std::uint64_t seed) {
  VerifyReport rep;
  auto want = [&](VerifySuite s) { return suite == VerifySuite::all || suite == s; };
  auto guarded = [&](const char* name, auto fn) {
    try {
      fn(seed, rep.checks);
    } catch (const std::exception& e) {
      rep.checks.push_back({name, "exception", false, NAN, 0.0, e.what()});
    }
  };
  if (want(VerifySuite::orbit)) guarded("orbit", orbit_suite);
  if (want(VerifySuite::compression)) guarded("compression", compression_suite);
  if (want(VerifySuite::newton_equivalence)) guarded("newton-equivalence", newton_suite);
  if (want(VerifySuite::null_prediction)) guarded("null-prediction", null_suite);
  return rep;
}

}  // namespace wb
