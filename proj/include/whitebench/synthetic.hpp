#pragma once
// Gaussian data with a prescribed covariance spectrum and labels from a fixed
// linear teacher acting on the leading principal directions.

#include <cstdint>
#include <vector>

#include "whitebench/data_model.hpp"
#include "whitebench/random.hpp"

namespace wb {

struct SyntheticSpec {
  enum class SpectrumKind { power_law, flat, custom };

  int d = 64;
  int n_train = 128;
  int n_val = 128;
  int n_test = 128;
  SpectrumKind spectrum = SpectrumKind::power_law;
  double alpha = 2.0;          // lambda_j proportional to j^-alpha
  std::vector<double> custom;  // used with SpectrumKind::custom, length d
  bool teacher = true;         // false: labels are pure noise
  double label_noise = 0.1;
  int classes = 10;
  bool one_hot = true;         // false: real-valued teacher outputs (k = classes rows)
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  LabeledData train;
  LabeledData val;
  LabeledData test;
};

/// Holds the covariance basis and teacher, which depend only on the seed, so
/// draws of different sizes share one distribution.
class SyntheticSource {
 public:
  explicit SyntheticSource(const SyntheticSpec& spec);

  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& basis() const { return basis_; }
  const Matrix& teacher() const { return teacher_; }
  Eigen::Index teacher_modes() const { return teacher_.cols(); }

  /// `stream` selects an independent sample stream.
  LabeledData draw(Eigen::Index count, std::uint64_t stream, Split split) const;

 private:
  SyntheticSpec spec_;
  Vector eigenvalues_;
  Matrix basis_;
  Matrix teacher_;
};

/// Train, validation and test draws on streams 1, 2 and 3.
SyntheticData synthesize(const SyntheticSpec& spec);

inline constexpr std::uint64_t kDistributionStream = 4;

}  // namespace wb
