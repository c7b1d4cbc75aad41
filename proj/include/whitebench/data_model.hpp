#pragma once
// Samples-as-columns datasets, their second moments, and the spectral
// primitives the rest of the library is built on.

#include <string>
#include <vector>

#include "whitebench/linalg.hpp"

namespace wb {

enum class Split { train, validation, test, combined };

const char* to_string(Split s);

/// A d x n matrix of samples stored as columns. Immutable once built.
class Dataset {
 public:
  /// Throws InputError on empty or non-finite input.
  Dataset(Matrix values, Split split, std::string id = {});

  const Matrix& values() const { return values_; }
  Eigen::Index feature_dim() const { return values_.rows(); }
  Eigen::Index sample_count() const { return values_.cols(); }
  Split split() const { return split_; }
  const std::string& id() const { return id_; }

  Dataset with_values(Matrix values) const { return Dataset(std::move(values), split_, id_); }
  Dataset columns(Eigen::Index first, Eigen::Index count, Split split) const;

 private:
  Matrix values_;
  Split split_;
  std::string id_;
};

/// Horizontal concatenation; result is tagged `combined`.
Dataset concatenate(const std::vector<const Dataset*>& parts, std::string id = {});

enum class LabelEncoding { one_hot, real_valued };

/// k x n targets paired column-for-column with a Dataset.
class LabelSet {
 public:
  LabelSet(Matrix targets, LabelEncoding encoding);

  static LabelSet from_classes(const std::vector<int>& classes, int num_classes);

  const Matrix& targets() const { return targets_; }
  LabelEncoding encoding() const { return encoding_; }
  Eigen::Index output_dim() const { return targets_.rows(); }
  Eigen::Index sample_count() const { return targets_.cols(); }

  /// Class index per column; argmax with ties going to the lowest index.
  std::vector<int> classes() const;
  LabelSet columns(Eigen::Index first, Eigen::Index count) const;

 private:
  Matrix targets_;
  LabelEncoding encoding_;
};

void check_paired(const Dataset& x, const LabelSet& y);

struct SecondMoments {
  Matrix F;  // X X^T, d x d
  Matrix K;  // X^T X, n x n
  std::string computed_from;
};

/// Eigenpairs sorted by descending eigenvalue; columns of `eigenvectors` match.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  /// Entries strictly above rel_tol * max(eigenvalue), with rel_tol relative to the top value.
  Eigen::Index count_above(double rel_tol) const;
};

Matrix compute_F(const Dataset& x);
Matrix compute_K(const Dataset& x);
Matrix compute_mixed_K(const Dataset& train, const Dataset& test);
SecondMoments second_moments(const Dataset& x);

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kPseudoinverseTolerance = 1e-10;
inline constexpr double kRankCutoffRatio = 1e-5;

/// Symmetric eigendecomposition. Eigenvector signs are fixed so that the
/// largest-magnitude entry of each column is positive.
Spectrum eigh(const Matrix& a);

/// Moore-Penrose pseudoinverse; singular values <= rel_tol * sigma_max are dropped.
Matrix pseudoinverse(const Matrix& a, double rel_tol = kPseudoinverseTolerance);

/// Number of singular values of F = X X^T above cutoff_ratio * sigma_max(F).
int estimate_input_rank(const Dataset& x, double cutoff_ratio = kRankCutoffRatio);

/// Per-sample MSE: (1/n) * sum_j 0.5 * ||pred_j - y_j||^2.
double mse_per_sample(const Matrix& predictions, const Matrix& targets);
/// Fraction of columns whose argmax (lowest index on ties) differs from the label's.
double classification_error(const Matrix& predictions, const LabelSet& labels);
std::vector<int> argmax_columns(const Matrix& m);

}  // namespace wb

namespace wb {

/// Inputs and targets travelling together.
struct LabeledData {
  Dataset x;
  LabelSet y;

  LabeledData(Dataset xs, LabelSet ys) : x(std::move(xs)), y(std::move(ys)) { check_paired(x, y); }
  Eigen::Index size() const { return x.sample_count(); }
};

}  // namespace wb
