// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#include "specrec/filters.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

namespace specrec {
namespace {

Vector inverseSqrt(const Vector& degrees) {
  Vector out(degrees.size());
  for (Index i = 0; i < degrees.size(); ++i)
    out(i) = degrees(i) > 0.0 ? 1.0 / std::sqrt(degrees(i)) : 0.0;
  return out;
}

Vector forwardSqrt(const Vector& degrees) {
  Vector out(degrees.size());
  for (Index i = 0; i < degrees.size(); ++i)
    out(i) = degrees(i) > 0.0 ? std::sqrt(degrees(i)) : 0.0;
  return out;
}

}  // namespace

ScoreMatrix applyConjugatedProjector(const SparseMatrix& signal,
                                     const Vector& item_degrees,
                                     const DenseMatrix& item_vectors) {
  if (signal.cols() != item_vectors.rows() ||
      item_degrees.size() != item_vectors.rows())
    throw ConfigError("conjugated projector: dimension mismatch");
  const Vector dm = inverseSqrt(item_degrees);
  const Vector dp = forwardSqrt(item_degrees);
  const DenseMatrix left = dm.asDiagonal() * item_vectors;  // D^{-1/2} W
  const DenseMatrix right = item_vectors.transpose() * dp.asDiagonal();
  ScoreMatrix scores = (signal * left) * right;
  return scores;
}

void FilterConfig::validate() const {
  if (enabled.ihf && p1 < 1)
    throw ConfigError("p1 must be >= 1 while the high-pass filter is enabled");
  if (enabled.ilf && p2 < 1)
    throw ConfigError("p2 must be >= 1 while the low-pass filter is enabled");
  if (q < 0.0 || q > 1.0) throw ConfigError("q must lie in [0, 1]");
  if (alpha1 < 0.0) throw ConfigError("alpha1 must be nonnegative");
  if (alpha2 < 0.0) throw ConfigError("alpha2 must be nonnegative");
  if (k1 < 1) throw ConfigError("k1 must be >= 1");
  if (k2 < 1) throw ConfigError("k2 must be >= 1");
}

ScoreMatrix idealHighpassScores(const InteractionMatrix& interactions,
                                const NormalizedMatrix& normalized,
                                const SpectralBasis& bottom_basis) {
  if (bottom_basis.end != SpectralEnd::Bottom)
    throw ConfigError("high-pass filter expects a bottom-end basis");
  if (bottom_basis.item_vectors.rows() != interactions.itemCount())
    throw ConfigError("high-pass filter: basis/item dimension mismatch");
  ScoreMatrix scores = applyConjugatedProjector(
      interactions.matrix(), normalized.item_degrees,
      bottom_basis.item_vectors);
  checkFinite(scores, "ideal high-pass scores");
  return scores;
}

SparseMatrix selectUniqueInteractions(const InteractionMatrix& interactions,
                                      const ScoreMatrix& highpass_scores,
                                      double q, bool quantile_over_support) {
  if (highpass_scores.rows() != interactions.userCount() ||
      highpass_scores.cols() != interactions.itemCount())
    throw ConfigError("unique-interaction mask: shape mismatch");

  const Vector thresholds =
      quantile_over_support
          ? columnQuantileOverSupport(highpass_scores, interactions, q)
          : columnQuantile(highpass_scores, q);

  std::vector<Eigen::Triplet<double>> triplets;
  const SparseMatrix& r = interactions.matrix();
  for (Index row = 0; row < r.outerSize(); ++row) {
    for (SparseMatrix::InnerIterator it(r, row); it; ++it) {
      if (highpass_scores(it.row(), it.col()) >= thresholds(it.col()))
        triplets.emplace_back(it.row(), it.col(), 1.0);
    }
  }
  SparseMatrix mask(r.rows(), r.cols());
  mask.setFromTriplets(triplets.begin(), triplets.end());
  mask.makeCompressed();
  return mask;
}

EnhancedMatrix enhance(const InteractionMatrix& interactions,
                       const SparseMatrix& mask, double alpha1) {
  if (alpha1 < 0.0) throw ConfigError("alpha1 must be nonnegative");
  const SparseMatrix& r = interactions.matrix();
  if (mask.rows() != r.rows() || mask.cols() != r.cols())
    throw ConfigError("enhance: mask shape mismatch");
  for (Index row = 0; row < mask.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(mask, row); it; ++it)
      if (it.value() != 0.0 && r.coeff(it.row(), it.col()) == 0.0)
        throw ConfigError("enhance: mask support outside interactions");

  EnhancedMatrix out;
  out.mask = mask;
  out.alpha1 = alpha1;
  if (alpha1 == 0.0) {
    out.values = r;
    return out;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(r.nonZeros());
  for (Index row = 0; row < r.outerSize(); ++row) {
    for (SparseMatrix::InnerIterator it(r, row); it; ++it) {
      const bool highlighted = mask.coeff(it.row(), it.col()) != 0.0;
      triplets.emplace_back(it.row(), it.col(),
                            highlighted ? 1.0 + alpha1 : 1.0);
    }
  }
  out.values = SparseMatrix(r.rows(), r.cols());
  out.values.setFromTriplets(triplets.begin(), triplets.end());
  out.values.makeCompressed();
  return out;
}

ScoreMatrix cascadedPredictWithBasis(const InteractionMatrix& interactions,
                                     const NormalizedMatrix& normalized,
                                     const SpectralBasis& bottom_basis,
                                     const FilterConfig& config,
                                     const SvdOptions& options) {
  config.validate();
  const Index m = interactions.userCount();
  const Index n = interactions.itemCount();
  if (!config.enabled.ilf) return ScoreMatrix::Zero(m, n);

  SparseMatrix enhanced = interactions.matrix();
  if (config.enabled.ihf && config.alpha1 > 0.0) {
    const SpectralBasis sliced = bottom_basis.k() == config.p1
                                     ? bottom_basis
                                     : bottom_basis.truncated(config.p1);
    const ScoreMatrix highpass =
        idealHighpassScores(interactions, normalized, sliced);
    const SparseMatrix mask = selectUniqueInteractions(
        interactions, highpass, config.q, config.quantile_over_support);
    enhanced = enhance(interactions, mask, config.alpha1).values;
  }

  const NormalizedMatrix enhanced_norm = normalizeWeighted(enhanced);
  const SpectralBasis top =
      truncatedSvdTop(enhanced_norm.values, config.p2, options);
  ScoreMatrix scores = applyConjugatedProjector(
      enhanced, enhanced_norm.item_degrees, top.item_vectors);
  checkFinite(scores, "cascaded prediction");
  return scores;
}

ScoreMatrix cascadedPredict(const InteractionMatrix& interactions,
                            const FilterConfig& config,
                            const SvdOptions& options) {
  config.validate();
  const NormalizedMatrix normalized = normalize(interactions);
  SpectralBasis bottom;
  if (config.enabled.ilf && config.enabled.ihf && config.alpha1 > 0.0)
    bottom = truncatedSvdBottom(normalized.values, config.p1, options);
  return cascadedPredictWithBasis(interactions, normalized, bottom, config,
                                  options);
}

ScoreMatrix idealLowpassScores(const InteractionMatrix& interactions,
                               Index p2, const SvdOptions& options) {
  FilterConfig config;
  config.enabled.ihf = false;
  config.p2 = p2;
  return cascadedPredict(interactions, config, options);
}

DenseMatrix neighborhoodFilter(const DenseMatrix& cooccurrence, int k) {
  if (k < 1) throw ConfigError("neighborhood filter order must be >= 1");
  if (cooccurrence.rows() != cooccurrence.cols())
    throw ConfigError("neighborhood filter expects a square matrix");
  if (k == 1) return cooccurrence;

  MatrixPowerCache cache(DenseMatrix::Identity(cooccurrence.rows(),
                                               cooccurrence.cols()) -
                         cooccurrence);
  return DenseMatrix::Identity(cooccurrence.rows(), cooccurrence.cols()) -
         cache.power(k);
}

MatrixPowerCache::MatrixPowerCache(DenseMatrix base) {
  powers_.emplace(1, std::move(base));
}

const DenseMatrix& MatrixPowerCache::power(int exponent) {
  if (exponent < 1) throw ConfigError("matrix power exponent must be >= 1");
  auto it = powers_.find(exponent);
  if (it != powers_.end()) return it->second;
  const int lo = exponent / 2;
  const int hi = exponent - lo;
  DenseMatrix result = power(lo) * power(hi);
  return powers_.emplace(exponent, std::move(result)).first->second;
}

std::pair<ScoreMatrix, ScoreMatrix> parallelPredict(
    const InteractionMatrix& interactions, const NormalizedMatrix& normalized,
    const FilterConfig& config) {
  config.validate();
  const Index m = interactions.userCount();
  const Index n = interactions.itemCount();

  ScoreMatrix p2 = ScoreMatrix::Zero(m, n);
  if (config.enabled.ihnf) {
    const DenseMatrix item_filter =
        neighborhoodFilter(cooccurrenceItem(normalized), config.k1);
    p2 = interactions.matrix() * item_filter;
    checkFinite(p2, "item neighborhood prediction");
  }

  ScoreMatrix p3 = ScoreMatrix::Zero(m, n);
  if (config.enabled.uhnf) {
    const DenseMatrix user_filter =
        neighborhoodFilter(cooccurrenceUser(normalized), config.k2);
    p3 = user_filter * interactions.matrix();
    checkFinite(p3, "user neighborhood prediction");
  }
  return {std::move(p2), std::move(p3)};
}

ScoreMatrix blend(const ScoreMatrix& p1, const ScoreMatrix& p2,
                  const ScoreMatrix& p3, double alpha2) {
  if (p1.rows() != p2.rows() || p1.cols() != p2.cols() ||
      p1.rows() != p3.rows() || p1.cols() != p3.cols())
    throw ConfigError("blend: shape mismatch");
  return alpha2 * p1 + p2 + p3;
}

ScoreMatrix predict(const InteractionMatrix& interactions,
                    const FilterConfig& config, const SvdOptions& options) {
  config.validate();
  const NormalizedMatrix normalized = normalize(interactions);

  ScoreMatrix p1 = ScoreMatrix::Zero(interactions.userCount(),
                                     interactions.itemCount());
  if (config.enabled.ilf) {
    SpectralBasis bottom;
    if (config.enabled.ihf && config.alpha1 > 0.0)
      bottom = truncatedSvdBottom(normalized.values, config.p1, options);
    p1 = cascadedPredictWithBasis(interactions, normalized, bottom, config,
                                  options);
  }
  auto [p2, p3] = parallelPredict(interactions, normalized, config);
  return blend(p1, p2, p3, config.alpha2);
}

ScoreMatrix gfcfPredict(const InteractionMatrix& interactions,
                        const NormalizedMatrix& normalized, double alpha,
                        Index k, const SvdOptions& options) {
  if (alpha < 0.0) throw ConfigError("gfcf alpha must be nonnegative");
  const SpectralBasis top = truncatedSvdTop(normalized.values, k, options);
  const ScoreMatrix projector_scores = applyConjugatedProjector(
      interactions.matrix(), normalized.item_degrees, top.item_vectors);
  const ScoreMatrix linear_scores =
      interactions.matrix() * cooccurrenceItem(normalized);
  ScoreMatrix scores = alpha * projector_scores + linear_scores;
  checkFinite(scores, "gfcf prediction");
  return scores;
}

ScoreMatrix pgspPredict(const InteractionMatrix& interactions,
                        const NormalizedMatrix& normalized, double phi,
                        Index k, const SvdOptions& options) {
  if (phi < 0.0 || phi > 1.0) throw ConfigError("pgsp phi must lie in [0, 1]");
  const Index m = interactions.userCount();
  const Index n = interactions.itemCount();
  if (k < 1 || k > m + n)
    throw ConfigError("pgsp rank k out of range");

  const SparseMatrix& rt = normalized.values;
  const DenseMatrix o_user = cooccurrenceUser(normalized);
  const DenseMatrix o_item = cooccurrenceItem(normalized);

  // Eigenvectors of the k smallest Laplacian eigenvalues of L = I - A are
  // the k dominant eigenvectors of A.
  DenseMatrix v_k(m + n, k);
  if (m + n <= options.dense_threshold) {
    DenseMatrix a(m + n, m + n);
    a.topLeftCorner(m, m) = o_user;
    a.topRightCorner(m, n) = DenseMatrix(rt);
    a.bottomLeftCorner(n, m) = DenseMatrix(rt.transpose());
    a.bottomRightCorner(n, n) = o_item;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a);
    for (Index j = 0; j < k; ++j)
      v_k.col(j) = es.eigenvectors().col(m + n - 1 - j);
  } else {
    // A + I is positive semidefinite (the spectrum of A is bounded below by
    // -1/4), so subspace iteration on the shifted operator yields the same
    // dominant eigenvectors without materializing A.
    auto shifted = [&](const Vector& x) -> Vector {
      Vector xu = x.head(m);
      Vector xi = x.tail(n);
      Vector y(m + n);
      y.head(m) = rt * (rt.transpose() * xu) + rt * xi;
      y.tail(n) = rt.transpose() * xu + rt.transpose() * (rt * xi);
      return y + x;
    };
    v_k = dominantSymmetricEigenpairs(m + n, k, shifted, options,
                                      "pgsp eigenbasis")
              .vectors;
  }

  DenseMatrix signal(m, m + n);
  signal.leftCols(m) = DenseMatrix(interactions.matrix() * rt.transpose());
  signal.rightCols(n) = DenseMatrix(interactions.matrix());

  // (1-phi) (S V) V^T + phi (S A); only the item block is returned.
  const DenseMatrix sv = signal * v_k;
  const DenseMatrix projected_items =
      sv * v_k.bottomRows(n).transpose();
  const DenseMatrix linear_items =
      signal.leftCols(m) * rt + signal.rightCols(n) * o_item;
  ScoreMatrix scores = (1.0 - phi) * projected_items + phi * linear_items;
  checkFinite(scores, "pgsp prediction");
  return scores;
}

double smoothness(const DenseMatrix& laplacian, const Vector& x) {
  if (laplacian.rows() != laplacian.cols())
    throw ConfigError("smoothness expects a square matrix");
  if (x.size() != laplacian.rows())
    throw ConfigError("smoothness: signal length mismatch");
  const double norm = x.norm();
  if (norm == 0.0) throw ConfigError("smoothness of the zero signal");
  return x.dot(laplacian * x) / norm;
}

double smoothnessQuotient(const DenseMatrix& laplacian, const Vector& x) {
  if (laplacian.rows() != laplacian.cols())
    throw ConfigError("smoothness expects a square matrix");
  if (x.size() != laplacian.rows())
    throw ConfigError("smoothness: signal length mismatch");
  const double norm2 = x.squaredNorm();
  if (norm2 == 0.0) throw ConfigError("smoothness of the zero signal");
  return x.dot(laplacian * x) / norm2;
}

}  // namespace specrec
