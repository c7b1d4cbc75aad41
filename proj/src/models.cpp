#include "whitebench/models.hpp"

#include <cmath>
#include <fstream>

#include "whitebench/binary_io.hpp"
#include "whitebench/errors.hpp"

namespace wb {

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }
const char* to_string(OutputHead h) {
  return h == OutputHead::linear_mse ? "linear_mse" : "softmax_xent";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw InputError("unknown activation '" + s + "' (expected relu|tanh)");
}

OutputHead parse_output_head(const std::string& s) {
  if (s == "linear_mse" || s == "mse") return OutputHead::linear_mse;
  if (s == "softmax_xent" || s == "xent") return OutputHead::softmax_xent;
  throw InputError("unknown output head '" + s + "' (expected linear_mse|softmax_xent)");
}

void MlpConfig::validate() const {
  if (layer_sizes.size() < 2) throw InputError("an MLP needs at least input and output sizes");
  for (int s : layer_sizes) {
    if (s < 1) throw InputError("layer sizes must be positive");
  }
}

std::uint64_t MlpConfig::hash() const {
  std::string bytes;
  for (int s : layer_sizes) bytes += std::to_string(s) + ",";
  bytes += to_string(activation);
  bytes += "|";
  bytes += to_string(head);
  bytes += hidden_bias ? "|bias" : "|nobias";
  bytes += reduction == Reduction::mean ? "|mean" : "|sum";
  return fnv1a(bytes);
}

Mlp::Mlp(MlpConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& s = config_.layer_sizes;
  for (std::size_t l = 0; l + 1 < s.size(); ++l) {
    weights_.push_back(Matrix::Zero(s[l + 1], s[l]));
    biases_.push_back(Vector::Zero(has_bias(static_cast<int>(l)) ? s[l + 1] : 0));
  }
}

Eigen::Index Mlp::parameter_count() const {
  Eigen::Index c = 0;
  for (int l = 0; l < layer_count(); ++l) c += weights_[l].size() + biases_[l].size();
  return c;
}

Vector Mlp::flatten() const {
  Vector out(parameter_count());
  Eigen::Index at = 0;
  for (int l = 0; l < layer_count(); ++l) {
    out.segment(at, weights_[l].size()) = Eigen::Map<const Vector>(weights_[l].data(), weights_[l].size());
    at += weights_[l].size();
    out.segment(at, biases_[l].size()) = biases_[l];
    at += biases_[l].size();
  }
  return out;
}

void Mlp::assign(const Vector& params) {
  if (params.size() != parameter_count()) throw ShapeError("parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (int l = 0; l < layer_count(); ++l) {
    Matrix& w = weights_[l];
    w = Eigen::Map<const Matrix>(params.data() + at, w.rows(), w.cols());
    at += w.size();
    biases_[l] = params.segment(at, biases_[l].size());
    at += biases_[l].size();
  }
}

Mlp init_isotropic(const MlpConfig& config, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0)) throw InputError("initial variance must be non-negative");
  Mlp m(config);
  m.seed = seed;
  Rng rng(seed);
  const double sd = std::sqrt(variance);
  for (int l = 0; l < m.layer_count(); ++l) {
    m.weights(l) = gaussian_matrix(m.weights(l).rows(), m.weights(l).cols(), sd, rng);
  }
  return m;
}

namespace {

Matrix activate(Activation a, const Matrix& z) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

// Derivative of the activation evaluated at pre-activation z.
Matrix activate_prime(Activation a, const Matrix& z) {
  if (a == Activation::relu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - z.array().tanh().square()).matrix();
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    p.col(j) = (logits.col(j).array() - m).exp().matrix();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

double normalizer(Reduction r, Eigen::Index n) {
  return r == Reduction::mean ? static_cast<double>(n) : 1.0;
}

}  // namespace

ForwardCache forward(const Mlp& model, const Matrix& x) {
  if (x.rows() != model.input_dim()) {
    throw ShapeError("MLP expects " + std::to_string(model.input_dim()) + " input features, got " +
                     std::to_string(x.rows()));
  }
  ForwardCache c;
  c.input = x;
  const int layers = model.layer_count();
  const Matrix* prev = &c.input;
  for (int l = 0; l < layers; ++l) {
    Matrix z = la::multiply(model.weights(l), *prev);
    if (model.has_bias(l)) z.colwise() += model.bias(l);
    c.pre.push_back(std::move(z));
    if (l + 1 < layers) {
      c.post.push_back(activate(model.config().activation, c.pre.back()));
      prev = &c.post.back();
    }
  }
  c.logits = c.pre.back();
  c.predictions = model.config().head == OutputHead::softmax_xent ? softmax(c.logits) : c.logits;
  return c;
}

double loss(OutputHead head, Reduction reduction, const Matrix& logits, const Matrix& y) {
  if (logits.rows() != y.rows() || logits.cols() != y.cols()) throw ShapeError("loss shape mismatch");
  const double norm = normalizer(reduction, logits.cols());
  if (head == OutputHead::linear_mse) return 0.5 * (logits - y).squaredNorm() / norm;
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    const double lse = m + std::log((logits.col(j).array() - m).exp().sum());
    total += -(y.col(j).array() * (logits.col(j).array() - lse)).sum();
  }
  return total / norm;
}

Matrix loss_gradient(OutputHead head, Reduction reduction, const Matrix& logits, const Matrix& y) {
  if (logits.rows() != y.rows() || logits.cols() != y.cols()) throw ShapeError("loss shape mismatch");
  const double norm = normalizer(reduction, logits.cols());
  if (head == OutputHead::linear_mse) return (logits - y) / norm;
  // Cross entropy against targets that sum to one per column.
  Matrix p = softmax(logits);
  for (Eigen::Index j = 0; j < p.cols(); ++j) p.col(j) = p.col(j) * y.col(j).sum() - y.col(j);
  return p / norm;
}

Gradients backward(const Mlp& model, const ForwardCache& cache, const Matrix& logits_grad) {
  const int layers = model.layer_count();
  if (logits_grad.rows() != cache.logits.rows() || logits_grad.cols() != cache.logits.cols()) {
    throw ShapeError("loss gradient does not match the cached forward pass");
  }
  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Matrix delta = logits_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix& input = l == 0 ? cache.input : cache.post[l - 1];
    g.weights[l] = la::multiply_nt(delta, input);
    g.biases[l] = model.has_bias(l) ? Vector(delta.rowwise().sum()) : Vector();
    if (l == 0) {
      g.first_layer_activation = delta;
    } else {
      const Matrix back = la::tn(model.weights(l), delta);
      delta = back.cwiseProduct(activate_prime(model.config().activation, cache.pre[l - 1]));
    }
  }
  g.flat.resize(model.parameter_count());
  Eigen::Index at = 0;
  for (int l = 0; l < layers; ++l) {
    g.flat.segment(at, g.weights[l].size()) = Eigen::Map<const Vector>(g.weights[l].data(), g.weights[l].size());
    at += g.weights[l].size();
    g.flat.segment(at, g.biases[l].size()) = g.biases[l];
    at += g.biases[l].size();
  }
  return g;
}

Matrix jvp(const Mlp& model, const ForwardCache& cache, const Vector& direction) {
  if (direction.size() != model.parameter_count()) throw ShapeError("direction has the wrong length");
  const int layers = model.layer_count();
  Eigen::Index at = 0;
  Matrix dz;
  for (int l = 0; l < layers; ++l) {
    const Matrix& w = model.weights(l);
    const Eigen::Map<const Matrix> dw(direction.data() + at, w.rows(), w.cols());
    at += w.size();
    const Matrix& input = l == 0 ? cache.input : cache.post[l - 1];
    Matrix next = la::multiply(Matrix(dw), input);
    if (l > 0) {
      const Matrix dpost = activate_prime(model.config().activation, cache.pre[l - 1]).cwiseProduct(dz);
      next += la::multiply(w, dpost);
    }
    if (model.has_bias(l)) {
      next.colwise() += direction.segment(at, w.rows());
      at += w.rows();
    }
    dz = std::move(next);
  }
  return dz;
}

Vector ggn_product(const Mlp& model, const ForwardCache& cache, const Vector& v) {
  const Matrix jv = jvp(model, cache, v);
  const double norm = normalizer(model.config().reduction, cache.logits.cols());
  Matrix hjv;
  if (model.config().head == OutputHead::linear_mse) {
    hjv = jv / norm;
  } else {
    const Matrix& p = cache.predictions;
    hjv.resize(jv.rows(), jv.cols());
    for (Eigen::Index j = 0; j < jv.cols(); ++j) {
      const double pj = p.col(j).dot(jv.col(j));
      hjv.col(j) = (p.col(j).cwiseProduct(jv.col(j)) - p.col(j) * pj) / norm;
    }
  }
  return backward(model, cache, hjv).flat;
}

MlpObjective::MlpObjective(const Mlp& shape, Matrix x, Matrix y)
    : shape_(shape), x_(std::move(x)), y_(std::move(y)) {
  if (x_.cols() != y_.cols()) throw ShapeError("batch inputs and targets differ in sample count");
  if (y_.rows() != shape_.output_dim()) throw ShapeError("target dimension does not match the model");
}

const ForwardCache& MlpObjective::cache_for(const Vector& params) const {
  if (!has_cache_ || cached_params_.size() != params.size() || cached_params_ != params) {
    shape_.assign(params);
    cache_ = forward(shape_, x_);
    cached_params_ = params;
    has_cache_ = true;
  }
  return cache_;
}

double MlpObjective::value(const Vector& params) const {
  const ForwardCache& c = cache_for(params);
  return loss(shape_.config().head, shape_.config().reduction, c.logits, y_);
}

Vector MlpObjective::gradient(const Vector& params) const {
  const ForwardCache& c = cache_for(params);
  return backward(shape_, c,
                  loss_gradient(shape_.config().head, shape_.config().reduction, c.logits, y_))
      .flat;
}

Vector MlpObjective::curvature_product(const Vector& params, const Vector& v) const {
  const ForwardCache& c = cache_for(params);
  return ggn_product(shape_, c, v);
}

const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd:
      return "sgd";
    case OptimizerKind::newton:
      return "newton";
    case OptimizerKind::regularized_gn:
      return "regularized_gn";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(const std::string& s) {
  if (s == "sgd" || s == "gd") return OptimizerKind::sgd;
  if (s == "newton" || s == "gn") return OptimizerKind::newton;
  if (s == "regularized_gn" || s == "rgn") return OptimizerKind::regularized_gn;
  throw InputError("unknown optimizer '" + s + "' (expected sgd|newton|regularized_gn)");
}

namespace {

struct Metrics {
  double loss;
  double accuracy;
  double error;
};

Metrics evaluate(const Mlp& model, const LabeledData& data) {
  const ForwardCache c = forward(model, data.x.values());
  Metrics m;
  m.loss = mse_per_sample(c.predictions, data.y.targets());
  if (model.config().head == OutputHead::softmax_xent) {
    m.loss = loss(OutputHead::softmax_xent, Reduction::mean, c.logits, data.y.targets());
  }
  m.error = data.y.encoding() == LabelEncoding::one_hot ? classification_error(c.predictions, data.y)
                                                        : kMissing;
  m.accuracy = std::isnan(m.error) ? kMissing : 1.0 - m.error;
  return m;
}

}  // namespace

TrainRecord train_to_cutoff(Mlp& model, const LabeledData& train, const LabeledData* val,
                            const LabeledData* test, const TrainOptions& options) {
  if (!(options.cutoff > 0.0 && options.cutoff <= 1.0)) throw InputError("cutoff must lie in (0, 1]");
  if (options.max_steps < 0) throw InputError("step cap must be non-negative");
  options.optimizer.validate();
  if (train.x.feature_dim() != model.input_dim() || train.y.output_dim() != model.output_dim()) {
    throw ShapeError("training data does not match the model shape");
  }

  const Eigen::Index n = train.size();
  const bool full_batch = options.kind != OptimizerKind::sgd || options.optimizer.batch_size == 0 ||
                          options.optimizer.batch_size >= n;
  const Eigen::Index batch = full_batch ? n : options.optimizer.batch_size;

  TrainRecord rec;
  rec.metadata["optimizer"] = to_string(options.kind);
  rec.metadata["batch_seed"] = std::to_string(options.batch_seed);
  rec.metadata["batch_size"] = std::to_string(batch);
  rec.metadata["init_seed"] = std::to_string(model.seed);
  rec.metadata["hidden_bias"] = model.config().hidden_bias ? "true" : "false";

  Rng rng(options.batch_seed);
  std::vector<Eigen::Index> order;
  std::size_t cursor = 0;
  Vector params = model.flatten();

  auto observe = [&](long step) {
    TrainStep s;
    s.step = step;
    s.time = static_cast<double>(step);
    const Metrics tr = evaluate(model, train);
    s.train_loss = tr.loss;
    s.train_accuracy = tr.accuracy;
    if (val) s.val_loss = evaluate(model, *val).loss;
    if (test) {
      const Metrics te = evaluate(model, *test);
      s.test_loss = te.loss;
      s.test_error = te.error;
    }
    rec.push(s);
    const bool better = val ? (rec.best_step < 0 || s.val_loss < rec.best_val_loss) : true;
    if (better) {
      rec.best_step = step;
      rec.best_time = s.time;
      rec.best_val_loss = s.val_loss;
      rec.test_loss_at_best = s.test_loss;
      rec.test_error_at_best = s.test_error;
    }
    if (options.observer) options.observer(step, model);
    return s;
  };

  auto reached = [&](const TrainStep& s) {
    return !std::isnan(s.train_accuracy) && s.train_accuracy >= options.cutoff;
  };

  TrainStep last = observe(0);
  if (reached(last)) {
    rec.steps_to_cutoff = 0;
    rec.epochs_to_cutoff = 0.0;
  }
  long step = 0;
  try {
    while (step < options.max_steps && (rec.steps_to_cutoff < 0 || options.continue_after_cutoff)) {
      Matrix bx;
      Matrix by;
      if (full_batch) {
        bx = train.x.values();
        by = train.y.targets();
      } else {
        if (cursor >= order.size()) {
          order = permutation(n, rng);
          cursor = 0;
        }
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(batch), order.size() - cursor);
        bx.resize(train.x.feature_dim(), static_cast<Eigen::Index>(take));
        by.resize(train.y.output_dim(), static_cast<Eigen::Index>(take));
        for (std::size_t i = 0; i < take; ++i) {
          bx.col(static_cast<Eigen::Index>(i)) = train.x.values().col(order[cursor + i]);
          by.col(static_cast<Eigen::Index>(i)) = train.y.targets().col(order[cursor + i]);
        }
        cursor += take;
      }
      const MlpObjective objective(model, std::move(bx), std::move(by));
      StepResult r;
      if (options.kind == OptimizerKind::sgd) {
        r = sgd_step(params, objective, options.optimizer);
      } else {
        OptimizerConfig cfg = options.optimizer;
        if (options.kind == OptimizerKind::newton) cfg.reg_lambda = 0.0;
        r = regularized_gn_step(params, objective, cfg);
      }
      params = std::move(r.params);
      model.assign(params);
      ++step;
      last = observe(step);
      if (rec.steps_to_cutoff < 0 && reached(last)) {
        rec.steps_to_cutoff = step;
        rec.epochs_to_cutoff = static_cast<double>(step) * static_cast<double>(batch) / static_cast<double>(n);
      }
    }
    rec.stopping_reason = rec.steps_to_cutoff >= 0 ? "cutoff" : "cap";
  } catch (const DivergenceError& e) {
    rec.stopping_reason = "divergence";
    rec.metadata["error"] = e.what();
  } catch (const StallError& e) {
    rec.stopping_reason = "stall";
    rec.metadata["error"] = e.what();
  } catch (const ConvergenceError& e) {
    rec.stopping_reason = "cg_nonconvergence";
    rec.metadata["error"] = e.what();
  }
  if (!val) {
    rec.best_step = last.step;
    rec.best_time = last.time;
    rec.test_loss_at_best = last.test_loss;
    rec.test_error_at_best = last.test_error;
  }
  return rec;
}

void save_checkpoint(const Mlp& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out.write("WBMC", 4);
  bin::write<std::uint16_t>(out, 1);
  const auto& cfg = model.config();
  bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.layer_sizes.size()));
  for (int s : cfg.layer_sizes) bin::write<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  bin::write<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.activation));
  bin::write<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.head));
  bin::write<std::uint8_t>(out, cfg.hidden_bias ? 1 : 0);
  bin::write<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.reduction));
  bin::write<std::uint64_t>(out, model.seed);
  bin::write<std::uint64_t>(out, cfg.hash());
  const Vector p = model.flatten();
  bin::write<std::uint64_t>(out, static_cast<std::uint64_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) bin::write_f64(out, p(i));
  if (!out) throw InputError("failed writing " + path);
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  bin::expect_magic(in, "WBMC", path);
  if (bin::read<std::uint16_t>(in, "version") != 1) throw ParseError(path + ": unsupported checkpoint version");
  MlpConfig cfg;
  const auto count = bin::read<std::uint32_t>(in, "layer count");
  if (count < 2 || count > 64) throw ParseError(path + ": implausible layer count");
  for (std::uint32_t i = 0; i < count; ++i) {
    cfg.layer_sizes.push_back(static_cast<int>(bin::read<std::uint32_t>(in, "layer size")));
  }
  const auto act = bin::read<std::uint8_t>(in, "activation");
  const auto head = bin::read<std::uint8_t>(in, "head");
  const auto bias = bin::read<std::uint8_t>(in, "bias flag");
  const auto red = bin::read<std::uint8_t>(in, "reduction");
  if (act > 1 || head > 1 || bias > 1 || red > 1) throw ParseError(path + ": bad enum value");
  cfg.activation = static_cast<Activation>(act);
  cfg.head = static_cast<OutputHead>(head);
  cfg.hidden_bias = bias == 1;
  cfg.reduction = static_cast<Reduction>(red);
  Mlp m(cfg);
  m.seed = bin::read<std::uint64_t>(in, "seed");
  if (bin::read<std::uint64_t>(in, "config hash") != cfg.hash()) {
    throw ParseError(path + ": config hash does not match the stored layout");
  }
  const auto pc = bin::read<std::uint64_t>(in, "parameter count");
  if (pc != static_cast<std::uint64_t>(m.parameter_count())) throw ParseError(path + ": parameter count mismatch");
  Vector p(m.parameter_count());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = bin::read_f64(in, "parameter");
  m.assign(p);
  return m;
}

}  // namespace wb
