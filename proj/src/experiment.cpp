// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#include "specrec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace specrec {
namespace {

std::string formatDouble(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string hexHash(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

double pickMetric(const MetricValues& values, const std::string& metric) {
  if (metric == "ndcg") return values.ndcg;
  if (metric == "f1") return values.f1;
  if (metric == "mrr") return values.mrr;
  throw ConfigError("unknown selection metric: " + metric);
}

}  // namespace

void ExperimentConfig::validate() const {
  static const std::set<std::string> kFormats = {"ml100k", "csv", "tsv"};
  static const std::set<std::string> kModels = {"cascade-parallel",
                                                "ideal-lowpass", "gfcf",
                                                "pgsp"};
  if (!kFormats.count(format))
    throw ConfigError("unknown dataset format: " + format);
  if (!kModels.count(model)) throw ConfigError("unknown model: " + model);
  if (dataset.empty()) throw ConfigError("dataset path is required");
  if (topk.empty()) throw ConfigError("at least one top-K depth is required");
  for (int k : topk)
    if (k < 1) throw ConfigError("top-K depths must be >= 1");
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  if (min_rating < 0.0) throw ConfigError("min rating must be nonnegative");
  if (gfcf_alpha < 0.0) throw ConfigError("gfcf alpha must be nonnegative");
  if (gfcf_k < 1) throw ConfigError("gfcf k must be >= 1");
  if (pgsp_phi < 0.0 || pgsp_phi > 1.0)
    throw ConfigError("pgsp phi must lie in [0, 1]");
  if (pgsp_k < 1) throw ConfigError("pgsp k must be >= 1");
  filter.validate();
}

std::map<std::string, std::string> ExperimentConfig::resolved() const {
  std::map<std::string, std::string> kv;
  kv["dataset"] = dataset.string();
  kv["format"] = format;
  kv["item_file"] = item_file.string();
  kv["ratio_train"] = formatDouble(ratios.train);
  kv["ratio_validation"] = formatDouble(ratios.validation);
  kv["ratio_test"] = formatDouble(ratios.test);
  kv["seed"] = std::to_string(seed);
  kv["per_user_split"] = per_user_split ? "true" : "false";
  kv["min_rating"] = formatDouble(min_rating);
  kv["model"] = model;
  kv["p1"] = std::to_string(filter.p1);
  kv["p2"] = std::to_string(filter.p2);
  kv["q"] = formatDouble(filter.q);
  kv["alpha1"] = formatDouble(filter.alpha1);
  kv["alpha2"] = formatDouble(filter.alpha2);
  kv["k1"] = std::to_string(filter.k1);
  kv["k2"] = std::to_string(filter.k2);
  kv["ihf"] = filter.enabled.ihf ? "true" : "false";
  kv["ilf"] = filter.enabled.ilf ? "true" : "false";
  kv["ihnf"] = filter.enabled.ihnf ? "true" : "false";
  kv["uhnf"] = filter.enabled.uhnf ? "true" : "false";
  kv["quantile_over_support"] =
      filter.quantile_over_support ? "true" : "false";
  kv["gfcf_alpha"] = formatDouble(gfcf_alpha);
  kv["gfcf_k"] = std::to_string(gfcf_k);
  kv["pgsp_phi"] = formatDouble(pgsp_phi);
  kv["pgsp_k"] = std::to_string(pgsp_k);
  std::ostringstream ks;
  for (std::size_t i = 0; i < topk.size(); ++i)
    ks << (i ? "," : "") << topk[i];
  kv["topk"] = ks.str();
  kv["exclude_validation"] = exclude_validation ? "true" : "false";
  return kv;
}

Workspace prepareWorkspace(const ExperimentConfig& config) {
  config.validate();
  Workspace ws;
  if (config.format == "ml100k")
    ws.records = loadMovieLens100K(config.dataset);
  else if (config.format == "csv")
    ws.records = loadTripletsCsv(config.dataset, ',');
  else
    ws.records = loadTripletsCsv(config.dataset, '\t');
  ws.data_hash = hashRecords(ws.records);

  SplitOptions split_options;
  split_options.ratios = config.ratios;
  split_options.seed = config.seed;
  split_options.per_user = config.per_user_split;
  split_options.min_rating = config.min_rating;
  ws.split = splitRecords(ws.records, split_options);

  ws.normalized = normalize(ws.split.train);
  ws.train_sets = itemSetsFromMatrix(ws.split.train);
  ws.validation_sets =
      itemSetsFromPairs(ws.split.validation, ws.split.train.userCount());
  ws.test_sets = itemSetsFromPairs(ws.split.test, ws.split.train.userCount());
  ws.exclude_sets = config.exclude_validation
                        ? mergeItemSets(ws.train_sets, ws.validation_sets)
                        : ws.train_sets;
  return ws;
}

namespace {

SpectralBasis bottomBasisMaybeCached(const Workspace& ws,
                                     const ExperimentConfig& config,
                                     Index k) {
  if (!config.cache_bases)
    return truncatedSvdBottom(ws.normalized.values, k, config.svd);
  const std::uint64_t hash = contentHash(ws.normalized.values);
  const auto path = basisCachePath(config.cache_dir, hash, k,
                                   SpectralEnd::Bottom);
  if (auto cached = loadBasis(path, ws.normalized.values.rows(),
                              ws.normalized.values.cols());
      cached && cached->k() == k && cached->end == SpectralEnd::Bottom)
    return *cached;
  SpectralBasis basis = truncatedSvdBottom(ws.normalized.values, k,
                                           config.svd);
  saveBasis(path, basis, ws.normalized.values.rows(),
            ws.normalized.values.cols());
  return basis;
}

ScoreMatrix cascadeComponent(const Workspace& ws,
                             const ExperimentConfig& config,
                             const FilterConfig& filter) {
  SpectralBasis bottom;
  if (filter.enabled.ilf && filter.enabled.ihf && filter.alpha1 > 0.0)
    bottom = bottomBasisMaybeCached(ws, config, filter.p1);
  return cascadedPredictWithBasis(ws.split.train, ws.normalized, bottom,
                                  filter, config.svd);
}

}  // namespace

ScoreMatrix predictWithModel(const Workspace& ws,
                             const ExperimentConfig& config) {
  const InteractionMatrix& train = ws.split.train;
  if (config.model == "cascade-parallel") {
    const ScoreMatrix p1 = cascadeComponent(ws, config, config.filter);
    auto [p2, p3] = parallelPredict(train, ws.normalized, config.filter);
    return blend(p1, p2, p3, config.filter.alpha2);
  }
  if (config.model == "ideal-lowpass") {
    FilterConfig plain = config.filter;
    plain.enabled = FilterToggles{false, true, false, false};
    return cascadeComponent(ws, config, plain);
  }
  if (config.model == "gfcf")
    return gfcfPredict(train, ws.normalized, config.gfcf_alpha, config.gfcf_k,
                       config.svd);
  if (config.model == "pgsp")
    return pgspPredict(train, ws.normalized, config.pgsp_phi, config.pgsp_k,
                       config.svd);
  throw ConfigError("unknown model: " + config.model);
}

RunResult run(const ExperimentConfig& config) {
  const Workspace ws = prepareWorkspace(config);
  const ScoreMatrix scores = predictWithModel(ws, config);

  RunResult result;
  result.data_hash = ws.data_hash;
  result.validation =
      evaluateScores(scores, ws.train_sets, ws.validation_sets, config.topk);
  result.test =
      evaluateScores(scores, ws.exclude_sets, ws.test_sets, config.topk);

  std::filesystem::create_directories(config.out_dir);
  writeReportJson(config.out_dir / "report.json", config, result);
  writeReportText(config.out_dir / "report.txt", config, result);
  {
    std::ofstream out(config.out_dir / "config.resolved", std::ios::trunc);
    if (!out)
      throw DataError("cannot write " +
                      (config.out_dir / "config.resolved").string());
    out << "data_hash=" << hexHash(ws.data_hash) << "\n";
    for (const auto& [key, value] : config.resolved())
      out << key << "=" << value << "\n";
  }
  if (config.save_rankings) {
    const int max_k = *std::max_element(config.topk.begin(),
                                        config.topk.end());
    const auto ranked = rankTopK(scores, ws.exclude_sets, max_k);
    std::ofstream out(config.out_dir / "rankings.tsv", std::ios::trunc);
    for (const auto& list : ranked) {
      for (std::size_t pos = 0; pos < list.items.size(); ++pos) {
        out << ws.split.train.userIds()[list.user] << '\t'
            << ws.split.train.itemIds()[list.items[pos]] << '\t' << (pos + 1)
            << '\t' << formatDouble(scores(list.user, list.items[pos]))
            << '\n';
      }
    }
  }
  return result;
}

std::vector<AblationRow> ablateWorkspace(const Workspace& ws,
                                         const ExperimentConfig& config) {
  FilterConfig full = config.filter;
  full.enabled = FilterToggles{};  // everything on

  FilterConfig plain = full;
  plain.enabled.ihf = false;

  const ScoreMatrix p1_full = cascadeComponent(ws, config, full);
  const ScoreMatrix p1_plain = cascadeComponent(ws, config, plain);
  auto [p2, p3] = parallelPredict(ws.split.train, ws.normalized, full);
  const ScoreMatrix zero =
      ScoreMatrix::Zero(p1_full.rows(), p1_full.cols());
  const double a2 = full.alpha2;

  auto evalRow = [&](const std::string& name,
                     const ScoreMatrix& scores) -> AblationRow {
    AblationRow row;
    row.name = name;
    row.test =
        evaluateScores(scores, ws.exclude_sets, ws.test_sets, config.topk);
    return row;
  };

  std::vector<AblationRow> rows;
  rows.push_back(evalRow("full", blend(p1_full, p2, p3, a2)));
  rows.push_back(evalRow("w/o IHF", blend(p1_plain, p2, p3, a2)));
  rows.push_back(evalRow("w/o IHF+ILF", blend(zero, p2, p3, a2)));
  rows.push_back(evalRow("w/o IHNF", blend(p1_full, zero, p3, a2)));
  rows.push_back(evalRow("w/o UHNF", blend(p1_full, p2, zero, a2)));
  rows.push_back(evalRow("w/o IHNF+UHNF", blend(p1_full, zero, zero, a2)));
  return rows;
}

std::vector<AblationRow> ablate(const ExperimentConfig& config) {
  const Workspace ws = prepareWorkspace(config);
  auto rows = ablateWorkspace(ws, config);
  std::filesystem::create_directories(config.out_dir);
  writeAblationCsv(config.out_dir / "ablation.csv", rows, config.topk);
  return rows;
}

SweepGrid::SweepGrid() {
  for (int i = 0; i <= 18; ++i) {
    alpha1s.push_back((i + 2) * 0.05);
    alpha2s.push_back((i + 2) * 0.05);
  }
}

std::size_t SweepGrid::cartesianSize() const {
  return p1s.size() * p2s.size() * qs.size() * alpha1s.size() *
         alpha2s.size() * k1s.size() * k2s.size();
}

namespace {

// Up to four evenly spaced values (always including the endpoints) for the
// coarse pass of a hierarchical sweep.
template <typename T>
std::vector<T> coarseSubset(const std::vector<T>& values) {
  if (values.size() <= 4) return values;
  std::vector<T> subset;
  const std::size_t last = values.size() - 1;
  for (int step = 0; step < 4; ++step) {
    const std::size_t idx =
        static_cast<std::size_t>(std::llround(step * last / 3.0));
    if (subset.empty() || values[idx] != subset.back())
      subset.push_back(values[idx]);
  }
  return subset;
}

template <typename T>
std::vector<T> fineNeighbors(const std::vector<T>& values, T best,
                             int radius) {
  auto it = std::find(values.begin(), values.end(), best);
  if (it == values.end()) return {};
  const auto pos = static_cast<long>(it - values.begin());
  std::vector<T> out;
  for (long d = -radius; d <= radius; ++d) {
    const long idx = pos + d;
    if (d == 0 || idx < 0 || idx >= static_cast<long>(values.size()))
      continue;
    out.push_back(values[static_cast<std::size_t>(idx)]);
  }
  return out;
}

// Shared immutable precomputation plus memoized intermediates. The cached
// pieces are built with exactly the same operation chains as the standalone
// filter functions, so a swept configuration reproduces identically when
// re-run on its own.
class SweepEvaluator {
 public:
  SweepEvaluator(const Workspace& ws, const ExperimentConfig& config,
                 const SweepGrid& grid, const std::string& metric,
                 int metric_k, Index top_max)
      : ws_(ws),
        config_(config),
        metric_(metric),
        metric_k_(metric_k),
        top_max_(top_max),
        o_item_(cooccurrenceItem(ws.normalized)),
        o_user_(cooccurrenceUser(ws.normalized)),
        item_power_(DenseMatrix::Identity(o_item_.rows(), o_item_.cols()) -
                    o_item_),
        user_power_(DenseMatrix::Identity(o_user_.rows(), o_user_.cols()) -
                    o_user_) {
    const FilterToggles toggles = config.filter.enabled;
    if (toggles.ilf && toggles.ihf) {
      Index p1_max = config.filter.p1;
      for (Index p1 : grid.p1s) p1_max = std::max(p1_max, p1);
      p1_max = std::min(p1_max, std::min(ws.split.train.userCount(),
                                         ws.split.train.itemCount()));
      bottom_full_ = bottomBasisMaybeCached(ws, config, p1_max);
    }
  }

  double objective(const FilterConfig& filter) {
    const ScoreMatrix scores = predict(filter);
    const MetricReport report = evaluateScores(
        scores, ws_.train_sets, ws_.validation_sets, {metric_k_});
    return pickMetric(report.at_k.at(metric_k_), metric_);
  }

  MetricReport testReport(const FilterConfig& filter,
                          const std::vector<int>& Ks) {
    const ScoreMatrix scores = predict(filter);
    return evaluateScores(scores, ws_.exclude_sets, ws_.test_sets, Ks);
  }

  ScoreMatrix predict(const FilterConfig& filter) {
    const Index m = ws_.split.train.userCount();
    const Index n = ws_.split.train.itemCount();

    ScoreMatrix p1 = ScoreMatrix::Zero(m, n);
    if (filter.enabled.ilf) p1 = cascade(filter);

    // F = I - (I - O)^k, with the k = 1 case reusing O itself exactly as
    // neighborhoodFilter does.
    ScoreMatrix p2 = ScoreMatrix::Zero(m, n);
    if (filter.enabled.ihnf) {
      const DenseMatrix f_item =
          filter.k1 == 1 ? o_item_
                         : DenseMatrix(DenseMatrix::Identity(n, n) -
                                       item_power_.power(filter.k1));
      p2 = ws_.split.train.matrix() * f_item;
    }
    ScoreMatrix p3 = ScoreMatrix::Zero(m, n);
    if (filter.enabled.uhnf) {
      const DenseMatrix f_user =
          filter.k2 == 1 ? o_user_
                         : DenseMatrix(DenseMatrix::Identity(m, m) -
                                       user_power_.power(filter.k2));
      p3 = f_user * ws_.split.train.matrix();
    }
    return blend(p1, p2, p3, filter.alpha2);
  }

 private:
  ScoreMatrix cascade(const FilterConfig& filter) {
    const bool enhance_on = filter.enabled.ihf && filter.alpha1 > 0.0;
    const std::tuple<Index, double, double, bool> key{
        enhance_on ? filter.p1 : 0, enhance_on ? filter.q : 0.0,
        enhance_on ? filter.alpha1 : 0.0, filter.quantile_over_support};
    if (!cascade_key_ || *cascade_key_ != key) {
      SparseMatrix enhanced = ws_.split.train.matrix();
      if (enhance_on) {
        const SpectralBasis sliced = bottom_full_.truncated(filter.p1);
        const ScoreMatrix highpass =
            idealHighpassScores(ws_.split.train, ws_.normalized, sliced);
        const SparseMatrix mask = selectUniqueInteractions(
            ws_.split.train, highpass, filter.q, filter.quantile_over_support);
        enhanced = enhance(ws_.split.train, mask, filter.alpha1).values;
      }
      enhanced_ = enhanced;
      enhanced_norm_ = normalizeWeighted(enhanced_);
      const Index top_k =
          std::min(std::min(enhanced_.rows(), enhanced_.cols()), top_max_);
      enhanced_top_ =
          truncatedSvdTop(enhanced_norm_.values, top_k, config_.svd);
      cascade_key_ = key;
    }
    const SpectralBasis top = enhanced_top_.truncated(filter.p2);
    ScoreMatrix scores = applyConjugatedProjector(
        enhanced_, enhanced_norm_.item_degrees, top.item_vectors);
    checkFinite(scores, "swept cascade");
    return scores;
  }

  const Workspace& ws_;
  const ExperimentConfig& config_;
  std::string metric_;
  int metric_k_;
  Index top_max_;
  DenseMatrix o_item_;
  DenseMatrix o_user_;
  MatrixPowerCache item_power_;
  MatrixPowerCache user_power_;
  SpectralBasis bottom_full_;
  std::optional<std::tuple<Index, double, double, bool>> cascade_key_;
  SparseMatrix enhanced_;
  NormalizedMatrix enhanced_norm_;
  SpectralBasis enhanced_top_;
};

}  // namespace

SweepResult sweepWorkspace(const Workspace& ws, const ExperimentConfig& config,
                           const SweepGrid& grid, const std::string& metric,
                           int metric_k, bool hierarchical) {
  if (grid.p1s.empty() || grid.p2s.empty() || grid.qs.empty() ||
      grid.alpha1s.empty() || grid.alpha2s.empty() || grid.k1s.empty() ||
      grid.k2s.empty())
    throw ConfigError("sweep grid must be nonempty in every dimension");
  if (ws.split.validation.empty())
    throw ConfigError("sweep requires a nonempty validation split");

  const Index rank_limit =
      std::min(ws.split.train.userCount(), ws.split.train.itemCount());
  auto clampRank = [&](std::vector<Index> values) {
    for (auto& v : values) v = std::min(v, rank_limit);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
  };
  SweepGrid g = grid;
  g.p1s = clampRank(g.p1s);
  g.p2s = clampRank(g.p2s);

  SweepResult result;
  FilterConfig current = config.filter;
  current.p1 = std::min(current.p1, rank_limit);
  current.p2 = std::min(current.p2, rank_limit);

  Index top_max = current.p2;
  for (Index p2 : g.p2s) top_max = std::max(top_max, p2);
  top_max = std::min(top_max, rank_limit);
  SweepEvaluator evaluator(ws, config, g, metric, metric_k, top_max);

  double best_objective = -1.0;
  auto record = [&](const std::string& stage, const FilterConfig& f,
                    double objective) {
    SweepPoint point;
    point.filter = f;
    point.objective = objective;
    result.evaluated.emplace_back(stage, point);
  };

  if (hierarchical) {
    auto sweepStage = [&](const std::string& stage, auto&& candidates,
                          auto&& assign) {
      FilterConfig best = current;
      bool improved = false;
      for (const auto& value : candidates) {
        FilterConfig trial = current;
        assign(trial, value);
        const double obj = evaluator.objective(trial);
        record(stage, trial, obj);
        if (obj > best_objective) {
          best_objective = obj;
          best = trial;
          improved = true;
        }
      }
      if (improved) current = best;
    };

    best_objective = evaluator.objective(current);
    record("init", current, best_objective);

    const FilterToggles t = current.enabled;
    if (t.ihnf)
      sweepStage("k1-coarse", coarseSubset(g.k1s),
                 [](FilterConfig& f, int v) { f.k1 = v; });
    if (t.uhnf)
      sweepStage("k2-coarse", coarseSubset(g.k2s),
                 [](FilterConfig& f, int v) { f.k2 = v; });
    if (t.ilf)
      sweepStage("p2", g.p2s, [](FilterConfig& f, Index v) { f.p2 = v; });
    if (t.ilf && t.ihf) {
      sweepStage("p1", g.p1s, [](FilterConfig& f, Index v) { f.p1 = v; });
      sweepStage("q", g.qs, [](FilterConfig& f, double v) { f.q = v; });
      sweepStage("alpha1-coarse", coarseSubset(g.alpha1s),
                 [](FilterConfig& f, double v) { f.alpha1 = v; });
      sweepStage("alpha1-fine",
                 fineNeighbors(g.alpha1s, current.alpha1, 2),
                 [](FilterConfig& f, double v) { f.alpha1 = v; });
    }
    if (t.ilf) {
      sweepStage("alpha2-coarse", coarseSubset(g.alpha2s),
                 [](FilterConfig& f, double v) { f.alpha2 = v; });
      sweepStage("alpha2-fine",
                 fineNeighbors(g.alpha2s, current.alpha2, 2),
                 [](FilterConfig& f, double v) { f.alpha2 = v; });
    }
    if (t.ihnf)
      sweepStage("k1-fine", fineNeighbors(g.k1s, current.k1, 3),
                 [](FilterConfig& f, int v) { f.k1 = v; });
    if (t.uhnf)
      sweepStage("k2-fine", fineNeighbors(g.k2s, current.k2, 3),
                 [](FilterConfig& f, int v) { f.k2 = v; });

    result.best = current;
    result.best_objective = best_objective;
  } else {
    // Exhaustive cartesian scan in lexicographic (p1, p2, q, alpha1,
    // alpha2, k1, k2) order; the first strict improvement wins, so ties
    // resolve to the lexicographically smallest tuple.
    std::vector<FilterConfig> points;
    for (Index p1 : g.p1s)
      for (Index p2 : g.p2s)
        for (double q : g.qs)
          for (double a1 : g.alpha1s)
            for (double a2 : g.alpha2s)
              for (int k1 : g.k1s)
                for (int k2 : g.k2s) {
                  FilterConfig f = current;
                  f.p1 = p1;
                  f.p2 = p2;
                  f.q = q;
                  f.alpha1 = a1;
                  f.alpha2 = a2;
                  f.k1 = k1;
                  f.k2 = k2;
                  points.push_back(f);
                }

    std::vector<double> objectives(points.size(), 0.0);
    const unsigned workers = std::max(1u, std::min<unsigned>(
        std::thread::hardware_concurrency(),
        static_cast<unsigned>(points.size())));
    if (workers > 1) {
      std::atomic<std::size_t> next{0};
      auto work = [&] {
        // Each worker owns an evaluator; points share only the immutable
        // workspace.
        SweepEvaluator local(ws, config, g, metric, metric_k, top_max);
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= points.size()) return;
          objectives[i] = local.objective(points[i]);
        }
      };
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    } else {
      for (std::size_t i = 0; i < points.size(); ++i)
        objectives[i] = evaluator.objective(points[i]);
    }

    best_objective = -1.0;
    FilterConfig best = current;
    for (std::size_t i = 0; i < points.size(); ++i) {
      record("grid", points[i], objectives[i]);
      if (objectives[i] > best_objective) {
        best_objective = objectives[i];
        best = points[i];
      }
    }
    result.best = best;
    result.best_objective = best_objective;
  }

  result.test = evaluator.testReport(result.best, config.topk);
  return result;
}

SweepResult sweep(const ExperimentConfig& config, const SweepGrid& grid,
                  const std::string& metric, int metric_k, bool hierarchical) {
  const Workspace ws = prepareWorkspace(config);
  SweepResult result =
      sweepWorkspace(ws, config, grid, metric, metric_k, hierarchical);
  std::filesystem::create_directories(config.out_dir);
  writeSweepCsv(config.out_dir / "sweep.csv", result);
  return result;
}

std::vector<ConsistencyRow> consistencyWorkspace(
    const Workspace& ws, const ExperimentConfig& config,
    const CategoryTable& categories, const std::vector<int>& top_categories,
    int list_length) {
  if (list_length < 1)
    throw ConfigError("consistency list length must be >= 1");

  FilterConfig full = config.filter;
  full.enabled = FilterToggles{};

  FilterConfig plain = full;
  plain.enabled.ihf = false;

  const ScoreMatrix p1_plain = cascadeComponent(ws, config, plain);
  const ScoreMatrix p1_full = cascadeComponent(ws, config, full);
  auto [p2, p3] = parallelPredict(ws.split.train, ws.normalized, full);
  const double a2 = full.alpha2;

  const auto historical =
      preferenceDistributions(ws.train_sets, categories);

  std::vector<std::pair<std::string, ScoreMatrix>> combos;
  combos.emplace_back("ILF", p1_plain);
  combos.emplace_back("ILF+IHF", p1_full);
  combos.emplace_back("ILF+IHF+UHNF", a2 * p1_full + p3);
  combos.emplace_back("ILF+IHF+UHNF+IHNF", a2 * p1_full + p3 + p2);

  std::vector<ConsistencyRow> rows;
  for (const auto& [name, scores] : combos) {
    const auto ranked = rankTopK(scores, ws.exclude_sets, list_length);
    ItemSets predicted(ranked.size());
    for (std::size_t u = 0; u < ranked.size(); ++u) {
      predicted[u] = ranked[u].items;
      std::sort(predicted[u].begin(), predicted[u].end());
    }
    const auto dists = preferenceDistributions(predicted, categories);
    for (int K : top_categories) {
      ConsistencyRow row;
      row.combination = name;
      row.top_categories = K;
      row.kl = klConsistency(historical, dists, K);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ConsistencyRow> consistency(const ExperimentConfig& config,
                                        const std::vector<int>& top_categories,
                                        int list_length) {
  if (config.item_file.empty())
    throw ConfigError("consistency analysis requires an item category file");
  const Workspace ws = prepareWorkspace(config);
  const CategoryTable categories =
      loadCategoriesMl100k(config.item_file, ws.split.train);
  auto rows = consistencyWorkspace(ws, config, categories, top_categories,
                                   list_length);
  std::filesystem::create_directories(config.out_dir);
  writeConsistencyCsv(config.out_dir / "consistency.csv", rows);
  return rows;
}

void writeReportJson(const std::filesystem::path& file,
                     const ExperimentConfig& config, const RunResult& result) {
  nlohmann::ordered_json j;
  j["model"] = config.model;
  j["data_hash"] = hexHash(result.data_hash);
  j["config"] = config.resolved();
  auto metricsJson = [](const MetricReport& report) {
    nlohmann::ordered_json m;
    for (const auto& [K, v] : report.at_k) {
      nlohmann::ordered_json row;
      row["f1"] = v.f1;
      row["mrr"] = v.mrr;
      row["ndcg"] = v.ndcg;
      m[std::to_string(K)] = row;
    }
    return m;
  };
  j["validation"] = metricsJson(result.validation);
  j["test"] = metricsJson(result.test);
  j["evaluated_users"] = result.test.evaluated_users;

  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

void writeReportText(const std::filesystem::path& file,
                     const ExperimentConfig& config, const RunResult& result) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << "model: " << config.model << "\n";
  out << "data_hash: " << hexHash(result.data_hash) << "\n";
  out << "evaluated_users: " << result.test.evaluated_users << "\n\n";
  auto table = [&](const char* name, const MetricReport& report) {
    out << name << "\n";
    out << std::left << std::setw(8) << "K" << std::setw(12) << "f1"
        << std::setw(12) << "mrr" << std::setw(12) << "ndcg" << "\n";
    out << std::setprecision(6) << std::fixed;
    for (const auto& [K, v] : report.at_k)
      out << std::left << std::setw(8) << K << std::setw(12) << v.f1
          << std::setw(12) << v.mrr << std::setw(12) << v.ndcg << "\n";
    out << std::defaultfloat << std::setprecision(17);
    out << "\n";
  };
  table("validation", result.validation);
  table("test", result.test);
}

void writeAblationCsv(const std::filesystem::path& file,
                      const std::vector<AblationRow>& rows,
                      const std::vector<int>& Ks) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << "variant";
  for (int K : Ks) out << ",f1@" << K << ",mrr@" << K << ",ndcg@" << K;
  out << "\n";
  out << std::setprecision(17);
  for (const auto& row : rows) {
    out << row.name;
    for (int K : Ks) {
      const auto& v = row.test.at_k.at(K);
      out << "," << v.f1 << "," << v.mrr << "," << v.ndcg;
    }
    out << "\n";
  }
}

void writeSweepCsv(const std::filesystem::path& file,
                   const SweepResult& result) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << "stage,p1,p2,q,alpha1,alpha2,k1,k2,objective\n";
  out << std::setprecision(17);
  for (const auto& [stage, point] : result.evaluated) {
    const auto& f = point.filter;
    out << stage << "," << f.p1 << "," << f.p2 << "," << f.q << ","
        << f.alpha1 << "," << f.alpha2 << "," << f.k1 << "," << f.k2 << ","
        << point.objective << "\n";
  }
  const auto& b = result.best;
  out << "best," << b.p1 << "," << b.p2 << "," << b.q << "," << b.alpha1
      << "," << b.alpha2 << "," << b.k1 << "," << b.k2 << ","
      << result.best_objective << "\n";
}

void writeConsistencyCsv(const std::filesystem::path& file,
                         const std::vector<ConsistencyRow>& rows) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << "top_categories,kl,filter_combination\n";
  out << std::setprecision(17);
  for (const auto& row : rows)
    out << row.top_categories << "," << row.kl << "," << row.combination
        << "\n";
}

}  // namespace specrec
