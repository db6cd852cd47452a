// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#include "specrec/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "specrec/detail/fnv.hpp"

namespace specrec {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> splitFields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, delim)) fields.push_back(field);
  if (!line.empty() && line.back() == delim) fields.push_back("");
  return fields;
}

bool parseDouble(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

bool parseInt64(const std::string& s, std::int64_t& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtoll(t.c_str(), &end, 10);
  return end == t.c_str() + t.size();
}

[[noreturn]] void lineError(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  throw DataError(msg.str());
}

std::ifstream openOrThrow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

// Deterministic bounded draw (rejection sampling), so shuffles do not depend
// on the standard library's distribution internals.
std::uint64_t boundedDraw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void fisherYates(std::vector<T>& values, std::mt19937_64& rng) {
  for (std::size_t i = values.size(); i > 1; --i)
    std::swap(values[i - 1], values[boundedDraw(rng, i)]);
}

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
};

SplitCounts splitCounts(std::size_t total, const SplitRatios& ratios) {
  const auto train = std::min(
      total, static_cast<std::size_t>(
                 std::llround(ratios.train * static_cast<double>(total))));
  const auto through_val = std::min(
      total,
      static_cast<std::size_t>(std::llround(
          (ratios.train + ratios.validation) * static_cast<double>(total))));
  return SplitCounts{train, through_val - train};
}

}  // namespace

std::vector<RatingRecord> loadMovieLens100K(const std::filesystem::path& path) {
  std::ifstream in = openOrThrow(path);
  std::vector<RatingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = splitFields(line, '\t');
    if (fields.size() != 4)
      lineError(path, line_no, "expected 4 tab-separated fields");
    RatingRecord rec;
    rec.user_id = trim(fields[0]);
    rec.item_id = trim(fields[1]);
    double rating;
    std::int64_t ts;
    if (rec.user_id.empty() || rec.item_id.empty())
      lineError(path, line_no, "empty user or item id");
    if (!parseDouble(fields[2], rating))
      lineError(path, line_no, "bad rating field '" + fields[2] + "'");
    if (!parseInt64(fields[3], ts))
      lineError(path, line_no, "bad timestamp field '" + fields[3] + "'");
    rec.rating = rating;
    rec.timestamp = ts;
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DataError("no interactions in " + path.string());
  return records;
}

std::vector<RatingRecord> loadTripletsCsv(const std::filesystem::path& path,
                                          char delimiter) {
  std::ifstream in = openOrThrow(path);
  std::vector<RatingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = splitFields(line, delimiter);
    if (first) {
      first = false;
      // Header rows name the columns user,item[,...].
      if (fields.size() >= 2) {
        std::string f0 = trim(fields[0]);
        std::string f1 = trim(fields[1]);
        std::transform(f0.begin(), f0.end(), f0.begin(), ::tolower);
        std::transform(f1.begin(), f1.end(), f1.begin(), ::tolower);
        if (f0.find("user") != std::string::npos &&
            f1.find("item") != std::string::npos)
          continue;
      }
    }
    if (fields.size() < 2 || fields.size() > 4)
      lineError(path, line_no, "expected 2 to 4 delimited fields");
    RatingRecord rec;
    rec.user_id = trim(fields[0]);
    rec.item_id = trim(fields[1]);
    if (rec.user_id.empty() || rec.item_id.empty())
      lineError(path, line_no, "empty user or item id");
    if (fields.size() >= 3) {
      double rating;
      if (!parseDouble(fields[2], rating))
        lineError(path, line_no, "bad rating field '" + fields[2] + "'");
      rec.rating = rating;
    } else {
      rec.rating = 1.0;
    }
    if (fields.size() == 4) {
      std::int64_t ts;
      if (!parseInt64(fields[3], ts))
        lineError(path, line_no, "bad timestamp field '" + fields[3] + "'");
      rec.timestamp = ts;
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DataError("no interactions in " + path.string());
  return records;
}

SplitDataset splitRecords(const std::vector<RatingRecord>& records,
                          const SplitOptions& options) {
  const double sum = options.ratios.train + options.ratios.validation +
                     options.ratios.test;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  if (options.ratios.train < 0.0 || options.ratios.validation < 0.0 ||
      options.ratios.test < 0.0)
    throw ConfigError("split ratios must be nonnegative");

  std::vector<std::pair<std::string, std::string>> kept;
  kept.reserve(records.size());
  for (const auto& rec : records) {
    if (options.min_rating > 0.0 && rec.rating.has_value() &&
        *rec.rating < options.min_rating)
      continue;
    kept.emplace_back(rec.user_id, rec.item_id);
  }
  if (kept.empty()) throw DataError("no interactions after rating filter");

  // Id maps come from the full dataset; the deduplicated pair list in
  // (user, item) index order is the deterministic base for shuffling.
  const InteractionMatrix full = InteractionMatrix::fromTriplets(kept);
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(full.interactionCount());
  const SparseMatrix& fm = full.matrix();
  for (Index row = 0; row < fm.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(fm, row); it; ++it)
      pairs.emplace_back(it.row(), it.col());

  std::mt19937_64 rng(options.seed);
  std::vector<std::pair<Index, Index>> train;
  std::vector<std::pair<Index, Index>> validation;
  std::vector<std::pair<Index, Index>> test;

  auto partition = [&](std::vector<std::pair<Index, Index>>& chunk) {
    fisherYates(chunk, rng);
    const SplitCounts counts = splitCounts(chunk.size(), options.ratios);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      if (i < counts.train)
        train.push_back(chunk[i]);
      else if (i < counts.train + counts.validation)
        validation.push_back(chunk[i]);
      else
        test.push_back(chunk[i]);
    }
  };

  if (options.per_user) {
    std::vector<std::pair<Index, Index>> chunk;
    for (std::size_t i = 0; i < pairs.size();) {
      chunk.clear();
      const Index user = pairs[i].first;
      while (i < pairs.size() && pairs[i].first == user)
        chunk.push_back(pairs[i++]);
      partition(chunk);
    }
  } else {
    partition(pairs);
  }

  std::sort(validation.begin(), validation.end());
  std::sort(test.begin(), test.end());

  SplitDataset split;
  split.train =
      InteractionMatrix::fromIndexPairs(full.userIds(), full.itemIds(), train);
  split.validation = std::move(validation);
  split.test = std::move(test);
  split.seed = options.seed;
  split.ratios = options.ratios;
  return split;
}

namespace {

void writePairs(const std::filesystem::path& file,
                const InteractionMatrix& ids,
                const std::vector<std::pair<Index, Index>>& pairs) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  for (const auto& [u, i] : pairs)
    out << ids.userIds()[u] << '\t' << ids.itemIds()[i] << "\t1\n";
}

std::vector<std::pair<std::string, std::string>> readPairs(
    const std::filesystem::path& file) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (!std::filesystem::exists(file)) return pairs;
  for (const auto& rec : loadTripletsCsv(file, '\t'))
    pairs.emplace_back(rec.user_id, rec.item_id);
  return pairs;
}

}  // namespace

void saveSplit(const std::filesystem::path& dir, const SplitDataset& split) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<Index, Index>> train_pairs;
  const SparseMatrix& tm = split.train.matrix();
  for (Index row = 0; row < tm.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(tm, row); it; ++it)
      train_pairs.emplace_back(it.row(), it.col());

  writePairs(dir / "train.tsv", split.train, train_pairs);
  writePairs(dir / "validation.tsv", split.train, split.validation);
  writePairs(dir / "test.tsv", split.train, split.test);

  std::ofstream meta(dir / "split.meta", std::ios::trunc);
  if (!meta) throw DataError("cannot write " + (dir / "split.meta").string());
  meta << std::setprecision(17);
  meta << "seed=" << split.seed << "\n";
  meta << "ratio_train=" << split.ratios.train << "\n";
  meta << "ratio_validation=" << split.ratios.validation << "\n";
  meta << "ratio_test=" << split.ratios.test << "\n";
  meta << "n_users=" << split.train.userCount() << "\n";
  meta << "n_items=" << split.train.itemCount() << "\n";
  meta << "n_train=" << train_pairs.size() << "\n";
  meta << "n_validation=" << split.validation.size() << "\n";
  meta << "n_test=" << split.test.size() << "\n";
  meta << "train_hash=" << split.train.contentHash() << "\n";
}

SplitDataset loadSplit(const std::filesystem::path& dir) {
  std::map<std::string, std::string> meta;
  {
    std::ifstream in = openOrThrow(dir / "split.meta");
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }

  const auto train_ids = readPairs(dir / "train.tsv");
  const auto val_ids = readPairs(dir / "validation.tsv");
  const auto test_ids = readPairs(dir / "test.tsv");

  std::vector<std::pair<std::string, std::string>> all = train_ids;
  all.insert(all.end(), val_ids.begin(), val_ids.end());
  all.insert(all.end(), test_ids.begin(), test_ids.end());
  const InteractionMatrix full = InteractionMatrix::fromTriplets(all);

  auto toIndexPairs = [&](const auto& id_pairs) {
    std::vector<std::pair<Index, Index>> out;
    out.reserve(id_pairs.size());
    for (const auto& [u, i] : id_pairs)
      out.emplace_back(*full.userIndex(u), *full.itemIndex(i));
    std::sort(out.begin(), out.end());
    return out;
  };

  SplitDataset split;
  split.train = InteractionMatrix::fromIndexPairs(
      full.userIds(), full.itemIds(), toIndexPairs(train_ids));
  split.validation = toIndexPairs(val_ids);
  split.test = toIndexPairs(test_ids);
  if (auto it = meta.find("seed"); it != meta.end())
    split.seed = std::stoull(it->second);
  if (auto it = meta.find("ratio_train"); it != meta.end())
    split.ratios.train = std::stod(it->second);
  if (auto it = meta.find("ratio_validation"); it != meta.end())
    split.ratios.validation = std::stod(it->second);
  if (auto it = meta.find("ratio_test"); it != meta.end())
    split.ratios.test = std::stod(it->second);

  if (auto it = meta.find("n_train"); it != meta.end())
    if (std::stoull(it->second) !=
        static_cast<std::uint64_t>(split.train.interactionCount()))
      throw DataError("split manifest does not match its triplet files");
  return split;
}

namespace {

const std::vector<std::string>& ml100kGenreNames() {
  static const std::vector<std::string> names = {
      "unknown",  "Action",    "Adventure", "Animation", "Children's",
      "Comedy",   "Crime",     "Documentary", "Drama",   "Fantasy",
      "Film-Noir", "Horror",   "Musical",   "Mystery",   "Romance",
      "Sci-Fi",   "Thriller",  "War",       "Western"};
  return names;
}

}  // namespace

CategoryTable loadCategoriesMl100k(const std::filesystem::path& path,
                                   const InteractionMatrix& interactions) {
  std::ifstream in = openOrThrow(path);
  CategoryTable table;
  table.category_names = ml100kGenreNames();
  table.item_categories.assign(interactions.itemCount(), {});

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = splitFields(line, '|');
    if (fields.size() < 20)
      lineError(path, line_no, "expected at least 20 pipe-separated fields");
    const std::string id = trim(fields[0]);
    const auto item = interactions.itemIndex(id);
    if (!item.has_value()) continue;  // metadata for an unseen item
    // The last 19 fields are the genre flags (titles may contain pipes).
    std::vector<int> cats;
    for (std::size_t g = 0; g < 19; ++g) {
      const std::string& flag = fields[fields.size() - 19 + g];
      const std::string t = trim(flag);
      if (t == "1")
        cats.push_back(static_cast<int>(g));
      else if (t != "0")
        lineError(path, line_no, "genre flag must be 0 or 1, got '" + t + "'");
    }
    table.item_categories[*item] = std::move(cats);
  }
  return table;
}

void exportTriplets(const std::filesystem::path& path,
                    const InteractionMatrix& interactions, char delimiter) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  const SparseMatrix& m = interactions.matrix();
  for (Index row = 0; row < m.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(m, row); it; ++it)
      out << interactions.userIds()[it.row()] << delimiter
          << interactions.itemIds()[it.col()] << delimiter << "1\n";
}

std::uint64_t hashRecords(const std::vector<RatingRecord>& records) {
  detail::Fnv1a h;
  h.mixU64(records.size());
  for (const auto& rec : records) {
    h.mixString(rec.user_id);
    h.mixString(rec.item_id);
    if (rec.rating.has_value()) {
      double r = *rec.rating;
      h.mix(&r, sizeof(r));
    }
    if (rec.timestamp.has_value())
      h.mixU64(static_cast<std::uint64_t>(*rec.timestamp));
  }
  return h.value();
}

}  // namespace specrec
