#pragma once
// Fully connected networks f(X) = g_theta(W X) with a bias-free dense first
// layer, plus the training loop that runs them to an accuracy cutoff.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "whitebench/iterative_opt.hpp"
#include "whitebench/random.hpp"
#include "whitebench/train_record.hpp"

namespace wb {

enum class Activation { relu, tanh };
enum class OutputHead { linear_mse, softmax_xent };
// Whether the batch loss is summed or averaged over samples.
enum class Reduction { sum, mean };

const char* to_string(Activation a);
const char* to_string(OutputHead h);
Activation parse_activation(const std::string& s);
OutputHead parse_output_head(const std::string& s);

struct MlpConfig {
  std::vector<int> layer_sizes;  // d, h1, ..., k
  Activation activation = Activation::relu;
  OutputHead head = OutputHead::linear_mse;
  bool hidden_bias = false;      // biases on layers after the first
  Reduction reduction = Reduction::mean;

  void validate() const;
  std::uint64_t hash() const;
};

class Mlp {
 public:
  explicit Mlp(MlpConfig config);

  const MlpConfig& config() const { return config_; }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  Eigen::Index input_dim() const { return config_.layer_sizes.front(); }
  Eigen::Index output_dim() const { return config_.layer_sizes.back(); }
  bool has_bias(int layer) const { return config_.hidden_bias && layer > 0; }

  // Layer l maps sizes[l] -> sizes[l+1]; weights(l) is sizes[l+1] x sizes[l].
  const Matrix& weights(int layer) const { return weights_.at(layer); }
  Matrix& weights(int layer) { return weights_.at(layer); }
  const Vector& bias(int layer) const { return biases_.at(layer); }
  Vector& bias(int layer) { return biases_.at(layer); }

  Eigen::Index parameter_count() const;
  /// Layer by layer: W_l column-major, then b_l when present.
  Vector flatten() const;
  void assign(const Vector& params);

  std::uint64_t seed = 0;

 private:
  MlpConfig config_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

/// Every weight drawn i.i.d. N(0, variance); biases start at zero.
Mlp init_isotropic(const MlpConfig& config, double variance, std::uint64_t seed);
inline constexpr double kDefaultInitVariance = 1e-4;

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // pre-activations; pre[0] is Z = W X
  std::vector<Matrix> post;  // activations of hidden layers
  Matrix logits;
  Matrix predictions;        // logits, or softmax of them
};

ForwardCache forward(const Mlp& model, const Matrix& x);

double loss(OutputHead head, Reduction reduction, const Matrix& logits, const Matrix& y);
/// dL/dlogits for the configured head and reduction.
Matrix loss_gradient(OutputHead head, Reduction reduction, const Matrix& logits, const Matrix& y);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix first_layer_activation;  // dL/dZ
  Vector flat;
};

Gradients backward(const Mlp& model, const ForwardCache& cache, const Matrix& logits_grad);

/// Directional derivative of the logits along a flattened parameter direction.
Matrix jvp(const Mlp& model, const ForwardCache& cache, const Vector& direction);

/// J^T H_loss J v, the generalized Gauss-Newton product.
Vector ggn_product(const Mlp& model, const ForwardCache& cache, const Vector& v);

class MlpObjective final : public Objective {
 public:
  MlpObjective(const Mlp& shape, Matrix x, Matrix y);
  Eigen::Index dimension() const override { return shape_.parameter_count(); }
  double value(const Vector& params) const override;
  Vector gradient(const Vector& params) const override;
  Vector curvature_product(const Vector& params, const Vector& v) const override;

 private:
  const ForwardCache& cache_for(const Vector& params) const;
  mutable Mlp shape_;
  Matrix x_;
  Matrix y_;
  mutable Vector cached_params_;
  mutable ForwardCache cache_;
  mutable bool has_cache_ = false;
};

enum class OptimizerKind { sgd, newton, regularized_gn };
const char* to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(const std::string& s);

struct TrainOptions {
  OptimizerKind kind = OptimizerKind::sgd;
  OptimizerConfig optimizer;
  double cutoff = 0.999;
  long max_steps = 10000;
  std::uint64_t batch_seed = 0;
  // Run until the step cap even after the cutoff is reached.
  bool continue_after_cutoff = false;
  // Called after every step, and once with step 0 before training.
  std::function<void(long step, const Mlp& model)> observer;
};

/// Trains in place. Batch order for SGD comes from batch_seed: each epoch is a
/// fresh permutation cut into consecutive batches (the last one may be short).
TrainRecord train_to_cutoff(Mlp& model, const LabeledData& train, const LabeledData* val,
                            const LabeledData* test, const TrainOptions& options);

/// Binary checkpoint, little-endian: "WBMC", u16 version (1), u32 layer-size
/// count, u32 sizes, u8 activation, u8 head, u8 hidden_bias, u8 reduction,
/// u64 seed, u64 config hash, u64 parameter count, f64 parameters in
/// flatten() order.
void save_checkpoint(const Mlp& model, const std::string& path);
Mlp load_checkpoint(const std::string& path);

}  // namespace wb
