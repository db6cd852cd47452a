// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <map>
#include <utility>

#include "specrec/sparse.hpp"
#include "specrec/spectral.hpp"

namespace specrec {

// Ablation switches for the four filters: ideal high-pass, ideal low-pass,
// item high-order neighborhood, user high-order neighborhood.
struct FilterToggles {
  bool ihf = true;
  bool ilf = true;
  bool ihnf = true;
  bool uhnf = true;
};

struct FilterConfig {
  Index p1 = 128;   // high-frequency components of the enhancement filter
  Index p2 = 64;    // low-frequency components of the prediction filter
  double q = 0.65;  // per-item quantile for selecting unique interactions
  double alpha1 = 0.3;  // enhancement weight
  double alpha2 = 0.5;  // cascade weight in the final blend
  int k1 = 6;           // item neighborhood filter order
  int k2 = 6;           // user neighborhood filter order
  FilterToggles enabled;
  // Quantile over the full column by default; optionally only over rows
  // that interact with the item.
  bool quantile_over_support = false;

  void validate() const;  // throws ConfigError
};

// signal * (D^{-1/2} W W^T D^{1/2}) without materializing the n x n filter,
// with the 0^{+-1/2} -> 0 convention for zero degrees.
ScoreMatrix applyConjugatedProjector(const SparseMatrix& signal,
                                     const Vector& item_degrees,
                                     const DenseMatrix& item_vectors);

// R* = R (D_I^{-1/2} W W^T D_I^{1/2}) with W the bottom singular vectors.
// Entry (u, i) scores how strongly the interaction reflects characteristics
// unique to the user/item rather than shared ones.
ScoreMatrix idealHighpassScores(const InteractionMatrix& interactions,
                                const NormalizedMatrix& normalized,
                                const SpectralBasis& bottom_basis);

// Binary mask: R*_{u,i} >= column quantile threshold and R_{u,i} > 0.
SparseMatrix selectUniqueInteractions(const InteractionMatrix& interactions,
                                      const ScoreMatrix& highpass_scores,
                                      double q,
                                      bool quantile_over_support = false);

// R^ = R + alpha1 * mask. alpha1 = 0 returns R unchanged.
EnhancedMatrix enhance(const InteractionMatrix& interactions,
                       const SparseMatrix& mask, double alpha1);

// Cascade: enhance interactions via the ideal high-pass filter, then project
// through the ideal low-pass filter rebuilt on the enhanced signal.
// With the high-pass disabled (or alpha1 = 0) this is exactly the plain
// ideal low-pass prediction on R; with the low-pass disabled it returns the
// zero matrix.
ScoreMatrix cascadedPredict(const InteractionMatrix& interactions,
                            const FilterConfig& config,
                            const SvdOptions& options = {});

// Same computation, reusing a precomputed normalization of R and a bottom
// basis with >= p1 columns (sliced as needed). Used by sweeps.
ScoreMatrix cascadedPredictWithBasis(const InteractionMatrix& interactions,
                                     const NormalizedMatrix& normalized,
                                     const SpectralBasis& bottom_basis,
                                     const FilterConfig& config,
                                     const SvdOptions& options = {});

// Plain ideal low-pass prediction on R (the alpha1 = 0 cascade path).
ScoreMatrix idealLowpassScores(const InteractionMatrix& interactions,
                               Index p2, const SvdOptions& options = {});

// F = I - (I - O)^k. k = 1 returns O itself (the linear-filter degeneracy,
// bit-exact). O must be symmetric with spectrum in [0, 1].
DenseMatrix neighborhoodFilter(const DenseMatrix& cooccurrence, int k);

// Memoized powers of a fixed square matrix via binary decomposition;
// lets a sweep over filter orders reuse intermediate products.
class MatrixPowerCache {
 public:
  explicit MatrixPowerCache(DenseMatrix base);
  const DenseMatrix& power(int exponent);

 private:
  std::map<int, DenseMatrix> powers_;
};

// P2 = R F_I and P3 = F_U R. Disabled filters produce zero matrices.
std::pair<ScoreMatrix, ScoreMatrix> parallelPredict(
    const InteractionMatrix& interactions, const NormalizedMatrix& normalized,
    const FilterConfig& config);

// P = alpha2 * P1 + P2 + P3.
ScoreMatrix blend(const ScoreMatrix& p1, const ScoreMatrix& p2,
                  const ScoreMatrix& p3, double alpha2);

// Full pipeline: cascade + parallel + blend under the config's toggles.
ScoreMatrix predict(const InteractionMatrix& interactions,
                    const FilterConfig& config, const SvdOptions& options = {});

// Baseline: R (alpha D_I^{-1/2} V_k V_k^T D_I^{1/2} + O_I).
ScoreMatrix gfcfPredict(const InteractionMatrix& interactions,
                        const NormalizedMatrix& normalized, double alpha,
                        Index k, const SvdOptions& options = {});

// Baseline: mixed-frequency filter (1-phi) V_k V_k^T + phi A over the
// augmented similarity graph A = [[O_U, R~], [R~^T, O_I]], applied to the
// personalized signal [R R~^T | R]; returns the item block.
ScoreMatrix pgspPredict(const InteractionMatrix& interactions,
                        const NormalizedMatrix& normalized, double phi,
                        Index k, const SvdOptions& options = {});

// Graph-signal smoothness x^T L x / ||x||_2 (zero x is an error).
double smoothness(const DenseMatrix& laplacian, const Vector& x);

// Rayleigh-quotient form x^T L x / x^T x, the quantity that spectral
// projectors move monotonically.
double smoothnessQuotient(const DenseMatrix& laplacian, const Vector& x);

}  // namespace specrec
