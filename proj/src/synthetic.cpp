#include "whitebench/synthetic.hpp"

#include <cmath>

#include "whitebench/errors.hpp"

namespace wb {

void SyntheticSpec::validate() const {
  if (d < 1 || n_train < 1 || n_val < 1 || n_test < 1) throw InputError("synthetic counts must be >= 1");
  if (!(alpha >= 0.0)) throw InputError("spectrum exponent must be >= 0");
  if (!(label_noise >= 0.0)) throw InputError("label noise must be >= 0");
  if (classes < 1) throw InputError("need at least one class/output");
  if (spectrum == SpectrumKind::custom) {
    if (static_cast<int>(custom.size()) != d) throw InputError("custom spectrum must have d entries");
    for (double v : custom) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("custom spectrum entries must be >= 0");
    }
  }
}

SyntheticSource::SyntheticSource(const SyntheticSpec& spec) : spec_(spec) {
  spec_.validate();
  const int d = spec_.d;
  eigenvalues_.resize(d);
  for (int j = 0; j < d; ++j) {
    switch (spec_.spectrum) {
      case SyntheticSpec::SpectrumKind::power_law:
        eigenvalues_(j) = std::pow(static_cast<double>(j + 1), -spec_.alpha);
        break;
      case SyntheticSpec::SpectrumKind::flat:
        eigenvalues_(j) = 1.0;
        break;
      case SyntheticSpec::SpectrumKind::custom:
        eigenvalues_(j) = spec_.custom[static_cast<std::size_t>(j)];
        break;
    }
  }
  Rng basis_rng(mix64(spec_.seed ^ 0x5a17ULL));
  basis_ = random_orthogonal(d, basis_rng);

  // Teacher rows are rescaled so every output has unit variance on clean
  // inputs, which keeps argmax classes roughly balanced.
  const Eigen::Index modes = (d + 3) / 4;
  Rng teacher_rng(mix64(spec_.seed ^ 0x7eacULL));
  teacher_ = gaussian_matrix(spec_.classes, modes, 1.0, teacher_rng);
  for (Eigen::Index c = 0; c < teacher_.rows(); ++c) {
    double var = 0.0;
    for (Eigen::Index j = 0; j < modes; ++j) var += teacher_(c, j) * teacher_(c, j) * eigenvalues_(j);
    if (var > 0.0) teacher_.row(c) /= std::sqrt(var);
  }
}

LabeledData SyntheticSource::draw(Eigen::Index count, std::uint64_t stream, Split split) const {
  Rng rng(mix64(spec_.seed * 0x100000001b3ULL + stream));
  const Matrix g = gaussian_matrix(spec_.d, count, 1.0, rng);
  const Matrix coords = eigenvalues_.cwiseSqrt().asDiagonal() * g;
  Matrix x = la::multiply(basis_, coords);
  const Matrix noise = gaussian_matrix(spec_.classes, count, 1.0, rng);

  Matrix out = spec_.label_noise * noise;
  if (spec_.teacher) out += la::multiply(teacher_, Matrix(coords.topRows(teacher_.cols())));

  const std::string id = "synthetic:" + std::to_string(spec_.seed) + ":" + std::to_string(stream);
  Dataset ds(std::move(x), split, id);
  if (!spec_.one_hot) return LabeledData(std::move(ds), LabelSet(std::move(out), LabelEncoding::real_valued));
  return LabeledData(std::move(ds), LabelSet::from_classes(argmax_columns(out), spec_.classes));
}

SyntheticData synthesize(const SyntheticSpec& spec) {
  const SyntheticSource src(spec);
  return {src.draw(spec.n_train, 1, Split::train), src.draw(spec.n_val, 2, Split::validation),
          src.draw(spec.n_test, 3, Split::test)};
}

}  // namespace wb
