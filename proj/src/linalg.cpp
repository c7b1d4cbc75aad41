#include "whitebench/linalg.hpp"

#include <cmath>
#include <span>

#include "whitebench/errors.hpp"
#include "whitebench/simd/kernels.hpp"

namespace wb::la {

namespace {
std::span<const double> column(const Matrix& m, Eigen::Index j) {
  return {m.data() + j * m.rows(), static_cast<std::size_t>(m.rows())};
}
}  // namespace

Matrix tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("tn: inner dimensions differ");
  Matrix out(a.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    auto bj = column(b, j);
    for (Eigen::Index i = 0; i < a.cols(); ++i) out(i, j) = simd::dot(column(a, i), bj);
  }
  return out;
}

Matrix gram(const Matrix& a) {
  const Eigen::Index n = a.cols();
  Matrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    auto aj = column(a, j);
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = simd::dot(column(a, i), aj);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Matrix outer_gram(const Matrix& a) {
  const Matrix at = a.transpose();
  return gram(at);
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("multiply: inner dimensions differ");
  const Matrix at = a.transpose();
  return tn(at, b);
}

Matrix multiply_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("multiply_nt: inner dimensions differ");
  const Matrix at = a.transpose();
  const Matrix bt = b.transpose();
  return tn(at, bt);
}

Vector multiply(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw ShapeError("multiply: inner dimensions differ");
  Vector out = Vector::Zero(a.rows());
  std::span<double> o{out.data(), static_cast<std::size_t>(out.size())};
  for (Eigen::Index j = 0; j < a.cols(); ++j) simd::axpy(x(j), column(a, j), o);
  return out;
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

bool all_finite(const Matrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i])) return false;
  }
  return true;
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace wb::la
