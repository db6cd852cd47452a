// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "specrec/data.hpp"
#include "specrec/eval.hpp"
#include "specrec/filters.hpp"

namespace specrec {

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::string format = "ml100k";  // ml100k | csv | tsv
  std::filesystem::path item_file;  // category metadata (u.item layout)

  SplitRatios ratios;
  std::uint64_t seed = 42;
  bool per_user_split = false;
  double min_rating = 0.0;

  // cascade-parallel | ideal-lowpass | gfcf | pgsp
  std::string model = "cascade-parallel";
  FilterConfig filter;
  double gfcf_alpha = 0.3;
  Index gfcf_k = 256;
  double pgsp_phi = 0.5;
  Index pgsp_k = 256;

  std::vector<int> topk = {10, 20};
  bool exclude_validation = true;  // exclusion set = train u validation
  std::filesystem::path out_dir = "results";
  bool save_rankings = false;

  bool cache_bases = false;
  std::filesystem::path cache_dir = "cache";

  SvdOptions svd;

  void validate() const;  // throws ConfigError
  // Resolved key=value form, also embedded in reports for provenance.
  std::map<std::string, std::string> resolved() const;
};

// Immutable per-split state shared by runs, sweeps and ablations.
struct Workspace {
  std::vector<RatingRecord> records;
  std::uint64_t data_hash = 0;
  SplitDataset split;
  NormalizedMatrix normalized;
  ItemSets train_sets;
  ItemSets exclude_sets;   // train (u validation when configured)
  ItemSets validation_sets;
  ItemSets test_sets;
};

Workspace prepareWorkspace(const ExperimentConfig& config);

ScoreMatrix predictWithModel(const Workspace& ws,
                             const ExperimentConfig& config);

struct RunResult {
  MetricReport validation;
  MetricReport test;
  std::uint64_t data_hash = 0;
};

// Full run: split, predict, evaluate, persist report.json / report.txt and
// the resolved config under out_dir. Byte-identical for identical configs.
RunResult run(const ExperimentConfig& config);

struct AblationRow {
  std::string name;
  MetricReport test;
};

// Table rows: full model, w/o IHF, w/o IHF+ILF, w/o IHNF, w/o UHNF,
// w/o IHNF+UHNF. The expensive score components are computed once and
// re-blended per row.
std::vector<AblationRow> ablate(const ExperimentConfig& config);
std::vector<AblationRow> ablateWorkspace(const Workspace& ws,
                                         const ExperimentConfig& config);

struct SweepGrid {
  std::vector<Index> p1s{16, 32, 64, 128, 256};
  std::vector<Index> p2s{16, 32, 64, 128, 256};
  std::vector<double> qs{0.6, 0.65, 0.7, 0.75, 0.8};
  std::vector<double> alpha1s;  // 0.1 .. 1.0 step 0.05 by default
  std::vector<double> alpha2s;  // 0.1 .. 1.0 step 0.05 by default
  std::vector<int> k1s{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  std::vector<int> k2s{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};

  SweepGrid();
  std::size_t cartesianSize() const;
};

struct SweepPoint {
  FilterConfig filter;
  double objective = 0.0;  // selection metric on the validation split
  MetricValues validation_at_selection_k;
};

struct SweepResult {
  FilterConfig best;
  double best_objective = 0.0;
  std::vector<std::pair<std::string, SweepPoint>> evaluated;  // stage, point
  MetricReport test;  // final test metrics at the selected config
};

// Hierarchical (coordinate-descent) sweep: each stage scans one
// hyperparameter with the others fixed, coarse-to-fine for the filter
// orders. Exhaustive mode scans the full cartesian grid. Selection is
// argmax of `metric` ("ndcg", "f1", "mrr") at `metric_k` on the validation
// split; ties break toward the lexicographically smallest
// (p1, p2, q, alpha1, alpha2, k1, k2).
SweepResult sweep(const ExperimentConfig& config, const SweepGrid& grid,
                  const std::string& metric = "ndcg", int metric_k = 10,
                  bool hierarchical = true);
SweepResult sweepWorkspace(const Workspace& ws, const ExperimentConfig& config,
                           const SweepGrid& grid, const std::string& metric,
                           int metric_k, bool hierarchical);

struct ConsistencyRow {
  std::string combination;
  int top_categories = 0;
  double kl = 0.0;
};

// KL divergence between historical and predicted preference distributions
// for the four cumulative filter combinations (ILF; +IHF; +UHNF; +IHNF)
// across the requested top-category counts. `list_length` is the number of
// predicted items per user.
std::vector<ConsistencyRow> consistency(const ExperimentConfig& config,
                                        const std::vector<int>& top_categories,
                                        int list_length = 20);
std::vector<ConsistencyRow> consistencyWorkspace(
    const Workspace& ws, const ExperimentConfig& config,
    const CategoryTable& categories, const std::vector<int>& top_categories,
    int list_length);

void writeReportJson(const std::filesystem::path& file,
                     const ExperimentConfig& config, const RunResult& result);
void writeReportText(const std::filesystem::path& file,
                     const ExperimentConfig& config, const RunResult& result);
void writeAblationCsv(const std::filesystem::path& file,
                      const std::vector<AblationRow>& rows,
                      const std::vector<int>& Ks);
void writeSweepCsv(const std::filesystem::path& file,
                   const SweepResult& result);
void writeConsistencyCsv(const std::filesystem::path& file,
                         const std::vector<ConsistencyRow>& rows);

}  // namespace specrec
