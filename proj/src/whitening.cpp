#include "whitebench/whitening.hpp"

#include <cmath>

#include "whitebench/errors.hpp"

namespace wb {

namespace {
constexpr double kWhitenRankTolerance = 1e-10;
constexpr double kDefaultJitterScale = 1e-8;
}  // namespace

const char* to_string(WhitenMode m) { return m == WhitenMode::pca ? "pca" : "zca"; }

const char* to_string(FitScope s) {
  switch (s) {
    case FitScope::train_only:
      return "train";
    case FitScope::full:
      return "full";
    case FitScope::distribution:
      return "distribution";
  }
  return "?";
}

const char* to_string(RankPolicy::Kind k) {
  return k == RankPolicy::Kind::jitter ? "jitter" : "manual";
}

WhitenMode parse_whiten_mode(const std::string& s) {
  if (s == "pca") return WhitenMode::pca;
  if (s == "zca") return WhitenMode::zca;
  throw InputError("unknown whitening mode '" + s + "' (expected pca|zca)");
}

FitScope parse_fit_scope(const std::string& s) {
  if (s == "train" || s == "train_only") return FitScope::train_only;
  if (s == "full") return FitScope::full;
  if (s == "distribution") return FitScope::distribution;
  throw InputError("unknown whitening scope '" + s + "' (expected train|full|distribution)");
}

RankPolicy::Kind parse_rank_policy(const std::string& s) {
  if (s == "jitter") return RankPolicy::Kind::jitter;
  if (s == "manual" || s == "manual_rank_control") return RankPolicy::Kind::manual_rank_control;
  throw InputError("unknown rank policy '" + s + "' (expected jitter|manual)");
}

Whitener fit_whitener(const Dataset& fit, const WhitenOptions& options) {
  if (options.policy.kind == RankPolicy::Kind::jitter && options.policy.epsilon < 0.0) {
    throw InputError("jitter must be non-negative");
  }
  const Eigen::Index d = fit.feature_dim();
  Whitener w;
  w.options_ = options;
  w.fit_id_ = fit.id();
  w.mean_ = Vector::Zero(d);

  Matrix x = fit.values();
  if (options.center) {
    w.mean_ = x.rowwise().mean();
    x.colwise() -= w.mean_;
  }
  const Spectrum spec = eigh(la::outer_gram(x));
  const double top = spec.eigenvalues(0);
  if (!(top > 0.0)) throw DegenerateError("cannot whiten data with an all-zero second moment");

  Vector sigma = spec.eigenvalues.cwiseMax(0.0);
  w.fit_rank_ = spec.count_above(kWhitenRankTolerance);

  Vector coeff(d);
  if (options.policy.kind == RankPolicy::Kind::jitter) {
    w.jitter_ = options.policy.epsilon > 0.0 ? options.policy.epsilon
                                             : kDefaultJitterScale * sigma.mean();
    for (Eigen::Index i = 0; i < d; ++i) coeff(i) = 1.0 / std::sqrt(sigma(i) + w.jitter_);
  } else {
    // Directions beyond the numerical rank get unit coefficients.
    for (Eigen::Index i = 0; i < d; ++i) {
      coeff(i) = i < w.fit_rank_ ? 1.0 / std::sqrt(sigma(i)) : 1.0;
    }
  }

  const Matrix& v = spec.eigenvectors;
  Matrix pca = coeff.asDiagonal() * v.transpose();
  if (options.mode == WhitenMode::pca) {
    w.m_ = std::move(pca);
  } else {
    w.m_ = la::symmetrize(v * pca);
  }
  return w;
}

Dataset apply(const Whitener& w, const Dataset& x) {
  if (x.feature_dim() != w.feature_dim()) {
    throw ShapeError("whitener expects " + std::to_string(w.feature_dim()) + " features, got " +
                     std::to_string(x.feature_dim()));
  }
  if (w.centered()) {
    Matrix shifted = x.values();
    shifted.colwise() -= w.mean();
    return x.with_values(la::multiply(w.transform(), shifted));
  }
  return x.with_values(la::multiply(w.transform(), x.values()));
}

WhitenessReport verify_whitened(const Dataset& x, double tol) {
  if (!(tol > 0.0)) throw InputError("tolerance must be positive");
  WhitenessReport r;
  r.eigenvalues = eigh(compute_F(x)).eigenvalues;
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
    const double e = r.eigenvalues(i);
    if (std::abs(e - 1.0) <= tol) {
      ++r.ones;
    } else if (std::abs(e) <= tol) {
      ++r.zeros;
    }
  }
  r.pass = r.ones + r.zeros == r.eigenvalues.size();
  return r;
}

}  // namespace wb
