#pragma once
// Seeded randomness. The generator is std::mt19937_64 and normals come from
// std::normal_distribution<double>; streams are reproducible for a given
// standard library, not across implementations.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "whitebench/linalg.hpp"

namespace wb {

using Rng = std::mt19937_64;

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// diagonal of R made positive.
Matrix random_orthogonal(Eigen::Index d, Rng& rng);

/// Uniformly shuffled 0..n-1.
std::vector<Eigen::Index> permutation(Eigen::Index n, Rng& rng);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
/// One splitmix64 step: golden-ratio increment, then the finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of one run inside a sweep: FNV-1a over the little-endian master seed,
/// the experiment id, the dataset size, the whitening mode and the seed index,
/// each field followed by a 0xff separator, passed through mix64.
std::uint64_t derive_seed(std::uint64_t master, std::string_view experiment_id,
                          std::int64_t dataset_size, std::string_view whitening_mode,
                          std::int64_t seed_index);

}  // namespace wb
