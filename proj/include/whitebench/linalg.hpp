#pragma once
// Dense products built on the dispatched dot/axpy kernels.
//
// Storage is Eigen's column-major layout, so A^T B reduces to dot products of
// contiguous columns. Everything else is phrased in terms of that product.

#include <Eigen/Dense>

namespace wb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace la {

// A^T B
Matrix tn(const Matrix& a, const Matrix& b);
// A^T A, exactly symmetric
Matrix gram(const Matrix& a);
// A A^T, exactly symmetric
Matrix outer_gram(const Matrix& a);
// A B
Matrix multiply(const Matrix& a, const Matrix& b);
// A B^T
Matrix multiply_nt(const Matrix& a, const Matrix& b);
// A x
Vector multiply(const Matrix& a, const Vector& x);

double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);
// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);

}  // namespace la
}  // namespace wb
