#include "whitebench/data_model.hpp"

#include <algorithm>
#include <cmath>

#include "whitebench/errors.hpp"

namespace wb {

const char* to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
    case Split::combined:
      return "combined";
  }
  return "?";
}

Dataset::Dataset(Matrix values, Split split, std::string id)
    : values_(std::move(values)), split_(split), id_(std::move(id)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw InputError("dataset must have at least one feature and one sample");
  }
  if (!la::all_finite(values_)) throw InputError("dataset contains non-finite values");
}

Dataset Dataset::columns(Eigen::Index first, Eigen::Index count, Split split) const {
  if (first < 0 || count < 1 || first + count > sample_count()) {
    throw ShapeError("column range out of bounds");
  }
  return Dataset(values_.middleCols(first, count), split, id_);
}

Dataset concatenate(const std::vector<const Dataset*>& parts, std::string id) {
  if (parts.empty()) throw InputError("nothing to concatenate");
  const Eigen::Index d = parts.front()->feature_dim();
  Eigen::Index n = 0;
  for (const Dataset* p : parts) {
    if (p->feature_dim() != d) throw ShapeError("feature dimension mismatch in concatenate");
    n += p->sample_count();
  }
  Matrix out(d, n);
  Eigen::Index at = 0;
  for (const Dataset* p : parts) {
    out.middleCols(at, p->sample_count()) = p->values();
    at += p->sample_count();
  }
  return Dataset(std::move(out), Split::combined, std::move(id));
}

LabelSet::LabelSet(Matrix targets, LabelEncoding encoding)
    : targets_(std::move(targets)), encoding_(encoding) {
  if (targets_.rows() < 1 || targets_.cols() < 1) throw InputError("empty label set");
  if (!la::all_finite(targets_)) throw InputError("labels contain non-finite values");
  if (encoding_ == LabelEncoding::one_hot) {
    for (Eigen::Index j = 0; j < targets_.cols(); ++j) {
      int ones = 0;
      for (Eigen::Index i = 0; i < targets_.rows(); ++i) {
        const double v = targets_(i, j);
        if (v == 1.0) {
          ++ones;
        } else if (v != 0.0) {
          throw InputError("one-hot column " + std::to_string(j) + " has a non 0/1 entry");
        }
      }
      if (ones != 1) throw InputError("one-hot column " + std::to_string(j) + " is not one-hot");
    }
  }
}

LabelSet LabelSet::from_classes(const std::vector<int>& classes, int num_classes) {
  if (num_classes < 1) throw InputError("need at least one class");
  Matrix t = Matrix::Zero(num_classes, static_cast<Eigen::Index>(classes.size()));
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (classes[j] < 0 || classes[j] >= num_classes) throw InputError("class index out of range");
    t(classes[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return LabelSet(std::move(t), LabelEncoding::one_hot);
}

std::vector<int> LabelSet::classes() const { return argmax_columns(targets_); }

LabelSet LabelSet::columns(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 1 || first + count > sample_count()) {
    throw ShapeError("column range out of bounds");
  }
  return LabelSet(targets_.middleCols(first, count), encoding_);
}

void check_paired(const Dataset& x, const LabelSet& y) {
  if (x.sample_count() != y.sample_count()) {
    throw ShapeError("dataset has " + std::to_string(x.sample_count()) + " samples but labels have " +
                     std::to_string(y.sample_count()));
  }
}

Eigen::Index Spectrum::count_above(double rel_tol) const {
  if (eigenvalues.size() == 0) return 0;
  const double top = eigenvalues(0);
  if (top <= 0.0) return 0;
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) > rel_tol * top) ++c;
  }
  return c;
}

Matrix compute_F(const Dataset& x) { return la::outer_gram(x.values()); }

Matrix compute_K(const Dataset& x) { return la::gram(x.values()); }

Matrix compute_mixed_K(const Dataset& train, const Dataset& test) {
  if (train.feature_dim() != test.feature_dim()) {
    throw ShapeError("mixed second moment needs equal feature dimensions (" +
                     std::to_string(train.feature_dim()) + " vs " +
                     std::to_string(test.feature_dim()) + ")");
  }
  return la::tn(train.values(), test.values());
}

SecondMoments second_moments(const Dataset& x) { return {compute_F(x), compute_K(x), x.id()}; }

Spectrum eigh(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("eigh needs a square matrix");
  if (!la::all_finite(a)) throw InputError("eigh input has non-finite entries");
  if (a.size() > 0 && la::max_abs(a - a.transpose()) > kSymmetryTolerance) {
    throw InputError("eigh input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(la::symmetrize(a));
  if (solver.info() != Eigen::Success) throw InputError("eigendecomposition failed");
  const Eigen::Index n = a.rows();
  Spectrum s;
  s.eigenvalues.resize(n);
  s.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = n - 1 - i;
    s.eigenvalues(i) = solver.eigenvalues()(src);
    Vector v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    s.eigenvectors.col(i) = v;
  }
  return s;
}

Matrix pseudoinverse(const Matrix& a, double rel_tol) {
  if (!la::all_finite(a)) throw InputError("pseudoinverse input has non-finite entries");
  if (!(rel_tol > 0.0)) throw InputError("pseudoinverse tolerance must be positive");
  if (a.size() == 0) return Matrix(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cut = rel_tol * (sv.size() > 0 ? sv(0) : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int estimate_input_rank(const Dataset& x, double cutoff_ratio) {
  if (!(cutoff_ratio > 0.0 && cutoff_ratio < 1.0)) {
    throw InputError("cutoff ratio must lie in (0, 1)");
  }
  const Matrix f = compute_F(x);
  Eigen::JacobiSVD<Matrix> svd(f);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff_ratio * sv(0)) ++r;
  }
  return r;
}

double mse_per_sample(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw ShapeError("prediction and target shapes differ");
  }
  if (predictions.cols() == 0) return 0.0;
  return 0.5 * (predictions - targets).squaredNorm() / static_cast<double>(predictions.cols());
}

std::vector<int> argmax_columns(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < m.rows(); ++i) {
      if (m(i, j) > m(best, j)) best = i;
    }
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

double classification_error(const Matrix& predictions, const LabelSet& labels) {
  if (predictions.cols() != labels.sample_count()) throw ShapeError("prediction count mismatch");
  const auto pred = argmax_columns(predictions);
  const auto truth = labels.classes();
  std::size_t wrong = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) wrong += pred[j] != truth[j];
  return pred.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(pred.size());
}

}  // namespace wb
