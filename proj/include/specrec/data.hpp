// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specrec/sparse.hpp"

namespace specrec {

struct RatingRecord {
  std::string user_id;
  std::string item_id;
  std::optional<double> rating;
  std::optional<std::int64_t> timestamp;
};

// Tab-separated `user \t item \t rating \t timestamp` (MovieLens 100K
// u.data layout). Malformed lines raise DataError with the line number.
std::vector<RatingRecord> loadMovieLens100K(const std::filesystem::path& path);

// Delimited `user,item[,rating[,timestamp]]` with an optional header row.
// Rating defaults to 1 when absent.
std::vector<RatingRecord> loadTripletsCsv(const std::filesystem::path& path,
                                          char delimiter = ',');

struct SplitRatios {
  double train = 0.72;
  double validation = 0.08;
  double test = 0.20;
};

// Train matrix plus held-out index pairs. The id maps of `train` are built
// from the full dataset, so validation/test pairs always resolve; users
// whose interactions all land in the held-out sets keep an all-zero row.
struct SplitDataset {
  InteractionMatrix train;
  std::vector<std::pair<Index, Index>> validation;
  std::vector<std::pair<Index, Index>> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

struct SplitOptions {
  SplitRatios ratios;
  std::uint64_t seed = 42;
  // Global interaction-level shuffle by default; per-user stratified as an
  // option (guards against users with empty training history).
  bool per_user = false;
  // Keep records with rating >= min_rating (records without a rating always
  // pass). 0 keeps everything.
  double min_rating = 0.0;
};

SplitDataset splitRecords(const std::vector<RatingRecord>& records,
                          const SplitOptions& options);

// Persists train/validation/test as triplet files plus a key=value metadata
// file (seed, ratios, counts, data hash); loadSplit restores an identical
// SplitDataset.
void saveSplit(const std::filesystem::path& dir, const SplitDataset& split);
SplitDataset loadSplit(const std::filesystem::path& dir);

// item index -> category label indices. Multi-category items appear under
// each of their categories.
struct CategoryTable {
  std::vector<std::vector<int>> item_categories;
  std::vector<std::string> category_names;
  int categoryCount() const { return static_cast<int>(category_names.size()); }
};

// Pipe-separated u.item layout: id|title|...|19 genre flags. Items are
// resolved against the interaction matrix's id map; metadata rows for items
// absent from the matrix are ignored.
CategoryTable loadCategoriesMl100k(const std::filesystem::path& path,
                                   const InteractionMatrix& interactions);

// Export in the generic triplet format understood by loadTripletsCsv;
// reloading yields an identical matrix.
void exportTriplets(const std::filesystem::path& path,
                    const InteractionMatrix& interactions,
                    char delimiter = '\t');

std::uint64_t hashRecords(const std::vector<RatingRecord>& records);

}  // namespace specrec
