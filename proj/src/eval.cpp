// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#include "specrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace specrec {

ItemSets itemSetsFromMatrix(const InteractionMatrix& interactions) {
  ItemSets sets(interactions.userCount());
  const SparseMatrix& m = interactions.matrix();
  for (Index row = 0; row < m.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(m, row); it; ++it)
      sets[it.row()].push_back(it.col());
  return sets;
}

ItemSets itemSetsFromPairs(const std::vector<std::pair<Index, Index>>& pairs,
                           Index n_users) {
  ItemSets sets(n_users);
  for (const auto& [u, i] : pairs) sets[u].push_back(i);
  for (auto& s : sets) std::sort(s.begin(), s.end());
  return sets;
}

ItemSets mergeItemSets(const ItemSets& a, const ItemSets& b) {
  if (a.size() != b.size())
    throw ConfigError("mergeItemSets: user count mismatch");
  ItemSets merged(a.size());
  for (std::size_t u = 0; u < a.size(); ++u) {
    std::set_union(a[u].begin(), a[u].end(), b[u].begin(), b[u].end(),
                   std::back_inserter(merged[u]));
  }
  return merged;
}

std::vector<RankedList> rankTopK(const ScoreMatrix& scores,
                                 const ItemSets& exclude, int K) {
  if (K < 1) throw ConfigError("ranking depth K must be >= 1");
  if (static_cast<Index>(exclude.size()) != scores.rows())
    throw ConfigError("rankTopK: exclusion set size mismatch");

  const Index n = scores.cols();
  std::vector<RankedList> ranked(scores.rows());
  std::vector<char> excluded(n);
  std::vector<Index> candidates;
  for (Index u = 0; u < scores.rows(); ++u) {
    std::fill(excluded.begin(), excluded.end(), 0);
    for (Index i : exclude[u]) excluded[i] = 1;

    candidates.clear();
    for (Index i = 0; i < n; ++i)
      if (!excluded[i]) candidates.push_back(i);

    const auto better = [&](Index a, Index b) {
      const double sa = scores(u, a);
      const double sb = scores(u, b);
      if (sa != sb) return sa > sb;
      return a < b;
    };
    const std::size_t keep =
        std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(K));
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), better);
    candidates.resize(keep);

    ranked[u].user = u;
    ranked[u].items = candidates;
  }
  return ranked;
}

namespace {

double idealDcg(int hits_possible) {
  double v = 0.0;
  for (int r = 1; r <= hits_possible; ++r) v += 1.0 / std::log2(r + 1.0);
  return v;
}

}  // namespace

MetricReport computeMetrics(const std::vector<RankedList>& ranked,
                            const ItemSets& truth,
                            const std::vector<int>& Ks) {
  if (ranked.size() != truth.size())
    throw ConfigError("computeMetrics: user count mismatch");

  MetricReport report;
  std::map<int, MetricValues> sums;
  for (int K : Ks) {
    if (K < 1) throw ConfigError("metric K must be >= 1");
    sums[K] = MetricValues{};
  }

  for (std::size_t u = 0; u < ranked.size(); ++u) {
    const auto& t = truth[u];
    if (t.empty()) continue;
    ++report.evaluated_users;

    for (int K : Ks) {
      const std::size_t depth =
          std::min<std::size_t>(ranked[u].items.size(),
                                static_cast<std::size_t>(K));
      int hits = 0;
      int first_hit_rank = 0;
      double dcg = 0.0;
      for (std::size_t pos = 0; pos < depth; ++pos) {
        const Index item = ranked[u].items[pos];
        if (std::binary_search(t.begin(), t.end(), item)) {
          ++hits;
          const int rank = static_cast<int>(pos) + 1;
          if (first_hit_rank == 0) first_hit_rank = rank;
          dcg += 1.0 / std::log2(rank + 1.0);
        }
      }

      const double precision = static_cast<double>(hits) / K;
      const double recall =
          static_cast<double>(hits) / static_cast<double>(t.size());
      auto& s = sums[K];
      if (precision + recall > 0.0)
        s.f1 += 2.0 * precision * recall / (precision + recall);
      if (first_hit_rank > 0) s.mrr += 1.0 / first_hit_rank;
      const double ideal =
          idealDcg(static_cast<int>(std::min<std::size_t>(K, t.size())));
      if (ideal > 0.0) s.ndcg += dcg / ideal;
    }
  }

  for (int K : Ks) {
    MetricValues v = sums[K];
    if (report.evaluated_users > 0) {
      const double users = static_cast<double>(report.evaluated_users);
      v.f1 /= users;
      v.mrr /= users;
      v.ndcg /= users;
    }
    report.at_k[K] = v;
  }
  return report;
}

MetricReport evaluateScores(const ScoreMatrix& scores, const ItemSets& exclude,
                            const ItemSets& truth,
                            const std::vector<int>& Ks) {
  if (Ks.empty()) throw ConfigError("no evaluation depths given");
  const int max_k = *std::max_element(Ks.begin(), Ks.end());
  const auto ranked = rankTopK(scores, exclude, max_k);
  return computeMetrics(ranked, truth, Ks);
}

std::vector<PreferenceDistribution> preferenceDistributions(
    const ItemSets& items_per_user, const CategoryTable& categories) {
  const int L = categories.categoryCount();
  std::vector<PreferenceDistribution> dists(items_per_user.size());
  for (std::size_t u = 0; u < items_per_user.size(); ++u) {
    auto& d = dists[u];
    d.user = static_cast<Index>(u);
    d.counts = Vector::Zero(L);
    for (Index item : items_per_user[u]) {
      if (item < 0 ||
          item >= static_cast<Index>(categories.item_categories.size()))
        throw ConfigError("preference distribution: item index out of range");
      for (int c : categories.item_categories[item]) d.counts(c) += 1.0;
    }
    const double total = d.counts.sum();
    d.valid = total > 0.0;
    d.probs = d.valid ? Vector(d.counts / total) : Vector::Zero(L);
  }
  return dists;
}

double klDivergence(const Vector& p, const Vector& q, double eps) {
  if (p.size() != q.size())
    throw ConfigError("klDivergence: dimension mismatch");
  Vector qs = q;
  if (eps > 0.0) {
    qs.array() += eps;
    qs /= qs.sum();
  }
  double kl = 0.0;
  for (Index l = 0; l < p.size(); ++l) {
    if (p(l) <= 0.0) continue;
    if (qs(l) <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p(l) * std::log(p(l) / qs(l));
  }
  return kl;
}

double klConsistency(const std::vector<PreferenceDistribution>& historical,
                     const std::vector<PreferenceDistribution>& predicted,
                     int top_categories, double eps) {
  if (historical.size() != predicted.size())
    throw ConfigError("klConsistency: user count mismatch");
  if (historical.empty()) throw ConfigError("klConsistency: no users");
  if (top_categories < 1)
    throw ConfigError("klConsistency: top_categories must be >= 1");

  const Index L = historical.front().counts.size();
  Vector global = Vector::Zero(L);
  for (const auto& d : historical)
    if (d.valid) global += d.counts;

  std::vector<Index> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return global(a) > global(b);
  });
  const Index keep = std::min<Index>(top_categories, L);
  order.resize(keep);

  double total = 0.0;
  std::size_t evaluated = 0;
  for (std::size_t u = 0; u < historical.size(); ++u) {
    const auto& h = historical[u];
    const auto& p = predicted[u];
    if (!h.valid || !p.valid) continue;

    Vector hp(keep);
    Vector pp(keep);
    for (Index j = 0; j < keep; ++j) {
      hp(j) = h.probs(order[j]);
      pp(j) = p.probs(order[j]);
    }
    if (hp.sum() <= 0.0) continue;  // no historical mass in the top bins
    hp /= hp.sum();
    if (pp.sum() > 0.0) pp /= pp.sum();

    total += klDivergence(hp, pp, eps);
    ++evaluated;
  }
  if (evaluated == 0) throw ConfigError("klConsistency: no evaluable users");
  return total / static_cast<double>(evaluated);
}

}  // namespace specrec
