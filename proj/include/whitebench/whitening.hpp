#pragma once
// PCA and ZCA whitening transforms fitted on the unnormalized second moment F.

#include <string>

#include "whitebench/data_model.hpp"

namespace wb {

enum class WhitenMode { pca, zca };
enum class FitScope { train_only, full, distribution };

struct RankPolicy {
  enum class Kind { jitter, manual_rank_control };
  Kind kind = Kind::jitter;
  // Jitter added to each eigenvalue of F before the inverse square root.
  // Zero selects 1e-8 * mean eigenvalue.
  double epsilon = 0.0;

  static RankPolicy jitter(double eps = 0.0) { return {Kind::jitter, eps}; }
  static RankPolicy manual() { return {Kind::manual_rank_control, 0.0}; }
};

struct WhitenOptions {
  WhitenMode mode = WhitenMode::pca;
  RankPolicy policy = RankPolicy::jitter();
  FitScope scope = FitScope::train_only;
  bool center = false;
};

const char* to_string(WhitenMode m);
const char* to_string(FitScope s);
const char* to_string(RankPolicy::Kind k);
WhitenMode parse_whiten_mode(const std::string& s);
FitScope parse_fit_scope(const std::string& s);
RankPolicy::Kind parse_rank_policy(const std::string& s);

class Whitener {
 public:
  const Matrix& transform() const { return m_; }
  const Vector& mean() const { return mean_; }
  WhitenMode mode() const { return options_.mode; }
  FitScope scope() const { return options_.scope; }
  const RankPolicy& policy() const { return options_.policy; }
  bool centered() const { return options_.center; }
  const std::string& fit_dataset_id() const { return fit_id_; }
  Eigen::Index feature_dim() const { return m_.cols(); }
  // Numerical rank of F on the fit set (eigenvalues above 1e-10 of the top one).
  Eigen::Index fit_rank() const { return fit_rank_; }
  // Jitter actually added; zero under manual rank control.
  double applied_jitter() const { return jitter_; }

 private:
  friend Whitener fit_whitener(const Dataset&, const WhitenOptions&);
  Matrix m_;
  Vector mean_;
  WhitenOptions options_;
  std::string fit_id_;
  Eigen::Index fit_rank_ = 0;
  double jitter_ = 0.0;
};

/// Throws DegenerateError when the fit data is identically zero.
Whitener fit_whitener(const Dataset& fit, const WhitenOptions& options);

/// M (X - mean); the split tag of X is kept.
Dataset apply(const Whitener& w, const Dataset& x);

struct WhitenessReport {
  Vector eigenvalues;  // of F of the checked data, descending
  int ones = 0;
  int zeros = 0;
  bool pass = false;
};

WhitenessReport verify_whitened(const Dataset& x, double tol);

}  // namespace wb
