// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <map>
#include <vector>

#include "specrec/data.hpp"
#include "specrec/sparse.hpp"

namespace specrec {

struct RankedList {
  Index user = 0;
  std::vector<Index> items;  // descending score, ties by ascending index
};

// Per-user item sets, ascending indices. Used both for exclusions (already
// seen items) and ground truth.
using ItemSets = std::vector<std::vector<Index>>;

ItemSets itemSetsFromMatrix(const InteractionMatrix& interactions);
ItemSets itemSetsFromPairs(const std::vector<std::pair<Index, Index>>& pairs,
                           Index n_users);
ItemSets mergeItemSets(const ItemSets& a, const ItemSets& b);

// Top-K non-excluded items per user.
std::vector<RankedList> rankTopK(const ScoreMatrix& scores,
                                 const ItemSets& exclude, int K);

struct MetricValues {
  double f1 = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
};

struct MetricReport {
  std::map<int, MetricValues> at_k;
  Index evaluated_users = 0;
};

// F1@K with P = hits/K, R = hits/|truth|; MRR@K = 1/rank of the first hit
// (0 when none); NDCG@K with binary gains, log2 discounts and the ideal DCG
// over min(K, |truth|). Users with empty truth are skipped; means are
// accumulated in user order so results are bit-stable.
MetricReport computeMetrics(const std::vector<RankedList>& ranked,
                            const ItemSets& truth, const std::vector<int>& Ks);

// Convenience: rank at max(Ks) once and score every K.
MetricReport evaluateScores(const ScoreMatrix& scores, const ItemSets& exclude,
                            const ItemSets& truth, const std::vector<int>& Ks);

struct PreferenceDistribution {
  Index user = 0;
  Vector counts;  // raw category appearance counts
  Vector probs;   // counts normalized to sum 1
  bool valid = false;  // false when the user has no countable items
};

// Category-appearance distribution of each user's item list (historical
// interactions or predicted items). Multi-category items contribute to each
// of their categories.
std::vector<PreferenceDistribution> preferenceDistributions(
    const ItemSets& items_per_user, const CategoryTable& categories);

// KL(p || q) = sum_l p_l ln(p_l / q_l). With eps > 0, q is smoothed by eps
// and renormalized so the divergence stays finite; eps = 0 is the raw
// divergence (+inf when q has a zero bin where p does not).
double klDivergence(const Vector& p, const Vector& q, double eps);

// Mean KL between historical and predicted preferences over users valid in
// both, restricted to the top `top_categories` categories by historical
// count (both distributions renormalized on those bins).
double klConsistency(const std::vector<PreferenceDistribution>& historical,
                     const std::vector<PreferenceDistribution>& predicted,
                     int top_categories, double eps = 1e-9);

}  // namespace specrec
