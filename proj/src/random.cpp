#include "whitebench/random.hpp"

#include <numeric>

namespace wb {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  if (stddev == 0.0) {
    m.setZero();
    return m;
  }
  std::normal_distribution<double> normal(0.0, stddev);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Matrix random_orthogonal(Eigen::Index d, Rng& rng) {
  const Matrix g = gaussian_matrix(d, d, 1.0, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

std::vector<Eigen::Index> permutation(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Eigen::Index{0});
  // Fisher-Yates with an explicit draw so the order does not depend on std::shuffle.
  for (std::size_t i = p.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p[i - 1], p[pick(rng)]);
  }
  return p;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
std::uint64_t feed_int(std::uint64_t h, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  h = fnv1a(std::string_view(buf, 8), h);
  return fnv1a(std::string_view("\xff", 1), h);
}
std::uint64_t feed_str(std::uint64_t h, std::string_view s) {
  h = fnv1a(s, h);
  return fnv1a(std::string_view("\xff", 1), h);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view experiment_id,
                          std::int64_t dataset_size, std::string_view whitening_mode,
                          std::int64_t seed_index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = feed_int(h, master);
  h = feed_str(h, experiment_id);
  h = feed_int(h, static_cast<std::uint64_t>(dataset_size));
  h = feed_str(h, whitening_mode);
  h = feed_int(h, static_cast<std::uint64_t>(seed_index));
  return mix64(h);
}

}  // namespace wb
