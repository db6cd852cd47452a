// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#include "specrec/sparse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include "specrec/detail/fnv.hpp"

namespace specrec {
namespace {

bool parseIntegral(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = v;
  return true;
}

// Numeric order when both ids are integers, lexicographic otherwise;
// numeric ids sort before non-numeric ones.
bool idLess(const std::string& a, const std::string& b) {
  long long va = 0;
  long long vb = 0;
  const bool na = parseIntegral(a, va);
  const bool nb = parseIntegral(b, vb);
  if (na && nb) {
    if (va != vb) return va < vb;
    return a < b;
  }
  if (na != nb) return na;
  return a < b;
}

std::vector<std::string> sortedUnique(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end(), idLess);
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

SparseMatrix binaryFromPairs(Index rows, Index cols,
                             const std::set<std::pair<Index, Index>>& pairs) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(pairs.size());
  for (const auto& [u, i] : pairs) triplets.emplace_back(u, i, 1.0);
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

InteractionMatrix InteractionMatrix::fromTriplets(
    const std::vector<std::pair<std::string, std::string>>& interactions) {
  if (interactions.empty()) throw DataError("no interactions");

  std::vector<std::string> users;
  std::vector<std::string> items;
  users.reserve(interactions.size());
  items.reserve(interactions.size());
  for (const auto& [u, i] : interactions) {
    users.push_back(u);
    items.push_back(i);
  }

  InteractionMatrix result;
  result.user_ids_ = sortedUnique(std::move(users));
  result.item_ids_ = sortedUnique(std::move(items));
  for (Index idx = 0; idx < static_cast<Index>(result.user_ids_.size()); ++idx)
    result.user_index_.emplace(result.user_ids_[idx], idx);
  for (Index idx = 0; idx < static_cast<Index>(result.item_ids_.size()); ++idx)
    result.item_index_.emplace(result.item_ids_[idx], idx);

  std::set<std::pair<Index, Index>> pairs;
  for (const auto& [u, i] : interactions)
    pairs.emplace(result.user_index_.at(u), result.item_index_.at(i));

  result.matrix_ =
      binaryFromPairs(static_cast<Index>(result.user_ids_.size()),
                      static_cast<Index>(result.item_ids_.size()), pairs);
  return result;
}

InteractionMatrix InteractionMatrix::fromIndexPairs(
    std::vector<std::string> user_ids, std::vector<std::string> item_ids,
    const std::vector<std::pair<Index, Index>>& entries) {
  if (user_ids.empty() || item_ids.empty())
    throw ConfigError("id tables must be nonempty");

  InteractionMatrix result;
  result.user_ids_ = std::move(user_ids);
  result.item_ids_ = std::move(item_ids);
  for (Index idx = 0; idx < static_cast<Index>(result.user_ids_.size()); ++idx)
    if (!result.user_index_.emplace(result.user_ids_[idx], idx).second)
      throw ConfigError("duplicate user id: " + result.user_ids_[idx]);
  for (Index idx = 0; idx < static_cast<Index>(result.item_ids_.size()); ++idx)
    if (!result.item_index_.emplace(result.item_ids_[idx], idx).second)
      throw ConfigError("duplicate item id: " + result.item_ids_[idx]);

  const Index m = static_cast<Index>(result.user_ids_.size());
  const Index n = static_cast<Index>(result.item_ids_.size());
  std::set<std::pair<Index, Index>> pairs;
  for (const auto& [u, i] : entries) {
    if (u < 0 || u >= m || i < 0 || i >= n)
      throw ConfigError("interaction index out of range");
    pairs.emplace(u, i);
  }
  result.matrix_ = binaryFromPairs(m, n, pairs);
  return result;
}

std::optional<Index> InteractionMatrix::userIndex(const std::string& id) const {
  auto it = user_index_.find(id);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Index> InteractionMatrix::itemIndex(const std::string& id) const {
  auto it = item_index_.find(id);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

bool InteractionMatrix::hasInteraction(Index u, Index i) const {
  if (u < 0 || u >= matrix_.rows() || i < 0 || i >= matrix_.cols())
    return false;
  return matrix_.coeff(u, i) != 0.0;
}

std::vector<Index> InteractionMatrix::itemsOf(Index u) const {
  std::vector<Index> items;
  for (SparseMatrix::InnerIterator it(matrix_, u); it; ++it)
    items.push_back(it.col());
  return items;
}

std::uint64_t InteractionMatrix::contentHash() const {
  return specrec::contentHash(matrix_);
}

std::uint64_t contentHash(const SparseMatrix& matrix) {
  detail::Fnv1a h;
  h.mixU64(static_cast<std::uint64_t>(matrix.rows()));
  h.mixU64(static_cast<std::uint64_t>(matrix.cols()));
  h.mixU64(static_cast<std::uint64_t>(matrix.nonZeros()));
  for (Index row = 0; row < matrix.outerSize(); ++row) {
    for (SparseMatrix::InnerIterator it(matrix, row); it; ++it) {
      h.mixU64(static_cast<std::uint64_t>(it.row()));
      h.mixU64(static_cast<std::uint64_t>(it.col()));
      double v = it.value();
      h.mix(&v, sizeof(v));
    }
  }
  return h.value();
}

NormalizedMatrix normalize(const InteractionMatrix& interactions) {
  return normalizeWeighted(interactions.matrix());
}

NormalizedMatrix normalizeWeighted(const SparseMatrix& values) {
  NormalizedMatrix out;
  out.user_degrees = Vector::Zero(values.rows());
  out.item_degrees = Vector::Zero(values.cols());
  for (Index row = 0; row < values.outerSize(); ++row) {
    for (SparseMatrix::InnerIterator it(values, row); it; ++it) {
      out.user_degrees(it.row()) += it.value();
      out.item_degrees(it.col()) += it.value();
    }
  }

  Vector user_scale(values.rows());
  for (Index u = 0; u < values.rows(); ++u) {
    const double d = out.user_degrees(u);
    user_scale(u) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  Vector item_scale(values.cols());
  for (Index i = 0; i < values.cols(); ++i) {
    const double d = out.item_degrees(i);
    item_scale(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }

  out.values = values;
  out.values.makeCompressed();
  double* vals = out.values.valuePtr();
  const auto* inner = out.values.innerIndexPtr();
  const auto* outer = out.values.outerIndexPtr();
  for (Index row = 0; row < out.values.outerSize(); ++row)
    for (auto p = outer[row]; p < outer[row + 1]; ++p)
      vals[p] *= user_scale(row) * item_scale(inner[p]);
  return out;
}

InteractionMatrix denormalize(const NormalizedMatrix& normalized,
                              const std::vector<std::string>& user_ids,
                              const std::vector<std::string>& item_ids) {
  std::vector<std::pair<Index, Index>> entries;
  for (Index row = 0; row < normalized.values.outerSize(); ++row) {
    for (SparseMatrix::InnerIterator it(normalized.values, row); it; ++it) {
      const double scale = std::sqrt(normalized.user_degrees(it.row()) *
                                     normalized.item_degrees(it.col()));
      const double recovered = it.value() * scale;
      if (std::abs(recovered - 1.0) > 1e-9)
        throw NumericError("denormalize: entry does not recover a binary 1");
      entries.emplace_back(it.row(), it.col());
    }
  }
  return InteractionMatrix::fromIndexPairs(user_ids, item_ids, entries);
}

DenseMatrix cooccurrenceItem(const NormalizedMatrix& normalized) {
  SparseMatrix product = SparseMatrix(normalized.values.transpose()) *
                         normalized.values;
  return DenseMatrix(product);
}

DenseMatrix cooccurrenceUser(const NormalizedMatrix& normalized) {
  SparseMatrix product = normalized.values *
                         SparseMatrix(normalized.values.transpose());
  return DenseMatrix(product);
}

namespace {

double nearestRank(std::vector<double>& values, double q) {
  const auto count = static_cast<long long>(values.size());
  long long rank = static_cast<long long>(
      std::ceil(q * static_cast<double>(count)));
  rank = std::max(1LL, std::min(rank, count));
  std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
  return values[rank - 1];
}

}  // namespace

Vector columnQuantile(const ScoreMatrix& scores, double q) {
  if (q < 0.0 || q > 1.0)
    throw ConfigError("quantile q must lie in [0, 1]");
  if (scores.rows() == 0 || scores.cols() == 0)
    throw ConfigError("quantile of an empty score matrix");

  Vector thresholds(scores.cols());
  std::vector<double> column(scores.rows());
  for (Index i = 0; i < scores.cols(); ++i) {
    Eigen::Map<Vector>(column.data(), scores.rows()) = scores.col(i);
    thresholds(i) = nearestRank(column, q);
  }
  return thresholds;
}

Vector columnQuantileOverSupport(const ScoreMatrix& scores,
                                 const InteractionMatrix& interactions,
                                 double q) {
  if (q < 0.0 || q > 1.0)
    throw ConfigError("quantile q must lie in [0, 1]");
  if (scores.rows() != interactions.userCount() ||
      scores.cols() != interactions.itemCount())
    throw ConfigError("quantile: score/interaction shape mismatch");

  std::vector<std::vector<double>> support(scores.cols());
  const SparseMatrix& r = interactions.matrix();
  for (Index row = 0; row < r.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(r, row); it; ++it)
      support[it.col()].push_back(scores(it.row(), it.col()));

  Vector thresholds(scores.cols());
  for (Index i = 0; i < scores.cols(); ++i) {
    thresholds(i) =
        support[i].empty() ? 0.0 : nearestRank(support[i], q);
  }
  return thresholds;
}

void checkFinite(const ScoreMatrix& scores, const char* context) {
  if (!scores.allFinite())
    throw NumericError(std::string(context) +
                       ": non-finite entries in score matrix");
}

}  // namespace specrec
