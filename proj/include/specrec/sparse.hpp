// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "specrec/errors.hpp"

namespace specrec {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Row-major (CSR) so per-user rows are contiguous.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Dense user x item prediction scores (rows = users).
using ScoreMatrix = Eigen::MatrixXd;

// Binary user x item interaction matrix with external-id <-> index maps.
// All stored values are exactly 1; duplicates are collapsed at build time.
// Index assignment is deterministic: external ids are sorted (numerically
// when both ids parse as integers, lexicographically otherwise).
class InteractionMatrix {
 public:
  static InteractionMatrix fromTriplets(
      const std::vector<std::pair<std::string, std::string>>& interactions);

  // Builds from pre-assigned index pairs over given id tables. Used by the
  // splitter, where the id maps come from the full dataset and the entry set
  // may be a subset (zero-degree rows/columns are retained).
  static InteractionMatrix fromIndexPairs(
      std::vector<std::string> user_ids, std::vector<std::string> item_ids,
      const std::vector<std::pair<Index, Index>>& entries);

  Index userCount() const { return matrix_.rows(); }
  Index itemCount() const { return matrix_.cols(); }
  Index interactionCount() const { return matrix_.nonZeros(); }

  const SparseMatrix& matrix() const { return matrix_; }

  const std::vector<std::string>& userIds() const { return user_ids_; }
  const std::vector<std::string>& itemIds() const { return item_ids_; }
  std::optional<Index> userIndex(const std::string& id) const;
  std::optional<Index> itemIndex(const std::string& id) const;

  bool hasInteraction(Index u, Index i) const;

  // Item indices of user u, ascending.
  std::vector<Index> itemsOf(Index u) const;

  // FNV-1a hash of dimensions and the entry set; used for provenance and
  // cache keys.
  std::uint64_t contentHash() const;

 private:
  InteractionMatrix() = default;
  SparseMatrix matrix_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, Index> user_index_;
  std::unordered_map<std::string, Index> item_index_;
};

// R~ = D_U^{-1/2} R D_I^{-1/2} together with the degree vectors.
// Zero degrees follow the 0^{-1/2} -> 0 convention, so rows/columns of
// inactive users/items stay all-zero and every filter remains total.
struct NormalizedMatrix {
  SparseMatrix values;
  Vector user_degrees;
  Vector item_degrees;
};

// Enhanced interaction signal: values = R + alpha1 * mask on the support of
// R, mask a binary subset of R's support.
struct EnhancedMatrix {
  SparseMatrix values;
  SparseMatrix mask;
  double alpha1 = 0.0;
};

NormalizedMatrix normalize(const InteractionMatrix& interactions);

// Generalization for weighted nonnegative matrices (degrees = row/column
// sums). For a binary matrix this coincides with normalize().
NormalizedMatrix normalizeWeighted(const SparseMatrix& values);

// Inverse of normalize for binary inputs: rescales each nonzero by
// sqrt(d_u * d_i) and rebuilds the binary matrix. Throws NumericError if a
// rescaled entry is not 1 within 1e-9.
InteractionMatrix denormalize(const NormalizedMatrix& normalized,
                              const std::vector<std::string>& user_ids,
                              const std::vector<std::string>& item_ids);

// O_I = R~^T R~ (item x item) and O_U = R~ R~^T (user x user). Symmetric
// with spectrum contained in [0, 1].
DenseMatrix cooccurrenceItem(const NormalizedMatrix& normalized);
DenseMatrix cooccurrenceUser(const NormalizedMatrix& normalized);

// Nearest-rank quantile per column: the ceil(q*m)-th smallest value of the
// full column (q = 0 maps to the minimum). q outside [0, 1] is a parameter
// error.
Vector columnQuantile(const ScoreMatrix& scores, double q);

// Variant restricted to rows that interact with the item (the column's
// support in R). Items with no interactions get threshold 0.
Vector columnQuantileOverSupport(const ScoreMatrix& scores,
                                 const InteractionMatrix& interactions,
                                 double q);

std::uint64_t contentHash(const SparseMatrix& matrix);

void checkFinite(const ScoreMatrix& scores, const char* context);

}  // namespace specrec
