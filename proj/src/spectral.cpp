// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#include "specrec/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace specrec {

static_assert(std::endian::native == std::endian::little,
              "basis cache assumes a little-endian host");

namespace {

void fixSigns(DenseMatrix& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (vectors(arg, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

void checkRank(const SparseMatrix& matrix, Index k) {
  const Index limit = std::min(matrix.rows(), matrix.cols());
  if (k < 1 || k > limit) {
    std::ostringstream msg;
    msg << "rank k=" << k << " out of range [1, " << limit << "] for a "
        << matrix.rows() << "x" << matrix.cols() << " matrix";
    throw ConfigError(msg.str());
  }
}

// Internal consistency check: R~^T (R~ v_j) == sigma_j^2 v_j.
void verifyBasis(const SparseMatrix& matrix, const SpectralBasis& basis) {
  for (Index j = 0; j < basis.k(); ++j) {
    const Vector v = basis.item_vectors.col(j);
    const Vector gv = matrix.transpose() * (matrix * v);
    const double lambda = basis.singular_values(j) * basis.singular_values(j);
    const double resid = (gv - lambda * v).norm();
    if (resid > 1e-6) {
      std::ostringstream msg;
      msg << "singular basis verification failed: column " << j
          << " residual " << resid;
      throw NumericError(msg.str());
    }
  }
}

SpectralBasis sliceThinV(const Vector& sigma, const DenseMatrix& thin_v,
                         Index k, SpectralEnd end) {
  SpectralBasis basis;
  basis.end = end;
  const Index total = thin_v.cols();
  const Index start = end == SpectralEnd::Top ? 0 : total - k;
  basis.singular_values = sigma.segment(start, k);
  basis.item_vectors = thin_v.middleCols(start, k);
  fixSigns(basis.item_vectors);
  return basis;
}

SpectralBasis denseSvd(const SparseMatrix& matrix, Index k, SpectralEnd end,
                       const SvdOptions& options) {
  const DenseMatrix dense(matrix);
  const Index big = std::max(matrix.rows(), matrix.cols());
  Vector sigma;
  DenseMatrix thin_v;
  if (big <= options.jacobi_threshold) {
    Eigen::JacobiSVD<DenseMatrix> svd(dense, Eigen::ComputeThinV);
    sigma = svd.singularValues();
    thin_v = svd.matrixV();
  } else {
    Eigen::BDCSVD<DenseMatrix> svd(dense, Eigen::ComputeThinV);
    sigma = svd.singularValues();
    thin_v = svd.matrixV();
  }
  return sliceThinV(sigma, thin_v, k, end);
}

// Deterministic standard normals (Box-Muller over an explicit u64->double
// mapping), independent of the standard library's distribution internals.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    const double u1 = unit();
    const double u2 = unit();
    return std::sqrt(-2.0 * std::log(u1 + 1e-300)) *
           std::cos(2.0 * M_PI * u2);
  }

 private:
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
};

DenseMatrix randomBlock(Index rows, Index cols, std::uint64_t seed) {
  NormalSource source(seed);
  DenseMatrix block(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) block(i, j) = source.next();
  return block;
}

DenseMatrix orthonormalize(const DenseMatrix& block) {
  Eigen::HouseholderQR<DenseMatrix> qr(block);
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(block.rows(),
                                                            block.cols());
  return q;
}

}  // namespace

EigenPairs dominantSymmetricEigenpairs(
    Index dim, Index k, const std::function<Vector(const Vector&)>& apply,
    const SvdOptions& options, const char* what) {
  const Index block = std::min(dim, k + 10);
  DenseMatrix x = orthonormalize(randomBlock(dim, block, options.seed));

  double worst = 0.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    DenseMatrix y(dim, block);
    for (Index j = 0; j < block; ++j) y.col(j) = apply(x.col(j));

    DenseMatrix t = x.transpose() * y;
    t = ((t + t.transpose()) * 0.5).eval();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(t);

    // Eigen returns ascending order; flip to descending.
    DenseMatrix rot(block, block);
    Vector vals(block);
    for (Index j = 0; j < block; ++j) {
      rot.col(j) = es.eigenvectors().col(block - 1 - j);
      vals(j) = es.eigenvalues()(block - 1 - j);
    }
    DenseMatrix ritz = x * rot;
    DenseMatrix op_ritz = y * rot;

    worst = 0.0;
    for (Index j = 0; j < k; ++j) {
      const double resid = (op_ritz.col(j) - vals(j) * ritz.col(j)).norm();
      worst = std::max(worst, resid);
    }
    const double scale = std::max(1.0, std::abs(vals(0)));
    if (worst <= options.tolerance * scale) {
      EigenPairs out;
      out.values = vals.head(k);
      out.vectors = ritz.leftCols(k);
      return out;
    }
    x = orthonormalize(y);
  }

  std::ostringstream msg;
  msg << what << ": no convergence after " << options.max_iterations
      << " iterations (worst residual " << worst << ", tolerance "
      << options.tolerance << ")";
  throw NumericError(msg.str());
}

namespace {

SpectralBasis iterativeTop(const SparseMatrix& matrix, Index k,
                           const SvdOptions& options) {
  const Index n = matrix.cols();
  auto gram = [&](const Vector& v) -> Vector {
    return matrix.transpose() * (matrix * v);
  };
  EigenPairs pairs =
      dominantSymmetricEigenpairs(n, k, gram, options, "truncated SVD");

  SpectralBasis basis;
  basis.end = SpectralEnd::Top;
  basis.singular_values = pairs.values.cwiseMax(0.0).cwiseSqrt();
  basis.item_vectors = pairs.vectors;
  for (Index j = 0; j < k; ++j)
    basis.item_vectors.col(j).normalize();
  fixSigns(basis.item_vectors);
  return basis;
}

SpectralBasis iterativeBottom(const SparseMatrix& matrix, Index k,
                              const SvdOptions& options) {
  const Index m = matrix.rows();
  const Index n = matrix.cols();

  SpectralBasis basis;
  basis.end = SpectralEnd::Bottom;

  if (n <= m) {
    // Smallest eigenpairs of the item co-occurrence = dominant pairs of
    // I - R~^T R~.
    auto complement = [&](const Vector& v) -> Vector {
      return v - Vector(matrix.transpose() * (matrix * v));
    };
    EigenPairs pairs =
        dominantSymmetricEigenpairs(n, k, complement, options, "bottom SVD");
    // Dominant mu = 1 - sigma^2 descending means sigma ascending; store
    // descending to match the Top layout.
    basis.singular_values = Vector(k);
    basis.item_vectors = DenseMatrix(n, k);
    for (Index j = 0; j < k; ++j) {
      const double lambda = std::max(0.0, 1.0 - pairs.values(j));
      basis.singular_values(k - 1 - j) = std::sqrt(lambda);
      basis.item_vectors.col(k - 1 - j) = pairs.vectors.col(j);
    }
  } else {
    // Wide matrix: the thin decomposition's tail lives on the user side.
    // Find the smallest user-side eigenpairs and map them to item vectors;
    // this requires the targeted singular values to be nonzero.
    auto complement = [&](const Vector& v) -> Vector {
      return v - Vector(matrix * (matrix.transpose() * v));
    };
    EigenPairs pairs =
        dominantSymmetricEigenpairs(m, k, complement, options, "bottom SVD");
    basis.singular_values = Vector(k);
    basis.item_vectors = DenseMatrix(n, k);
    for (Index j = 0; j < k; ++j) {
      const double lambda = std::max(0.0, 1.0 - pairs.values(j));
      const double sigma = std::sqrt(lambda);
      if (sigma < 1e-10)
        throw NumericError(
            "bottom SVD: targeted singular value is numerically zero on a "
            "wide matrix; the iterative path cannot recover the item-side "
            "direction (use the dense path)");
      Vector v = matrix.transpose() * pairs.vectors.col(j);
      v /= sigma;
      v.normalize();
      basis.singular_values(k - 1 - j) = sigma;
      basis.item_vectors.col(k - 1 - j) = v;
    }
  }
  fixSigns(basis.item_vectors);
  return basis;
}

}  // namespace

SpectralBasis SpectralBasis::truncated(Index k) const {
  if (k < 1 || k > this->k())
    throw ConfigError("truncated: k out of range");
  SpectralBasis out;
  out.end = end;
  const Index start = end == SpectralEnd::Top ? 0 : this->k() - k;
  out.singular_values = singular_values.segment(start, k);
  out.item_vectors = item_vectors.middleCols(start, k);
  return out;
}

SpectralBasis truncatedSvdTop(const SparseMatrix& normalized, Index k,
                              const SvdOptions& options) {
  checkRank(normalized, k);
  const Index big = std::max(normalized.rows(), normalized.cols());
  SpectralBasis basis = big <= options.dense_threshold
                            ? denseSvd(normalized, k, SpectralEnd::Top, options)
                            : iterativeTop(normalized, k, options);
  verifyBasis(normalized, basis);
  return basis;
}

SpectralBasis truncatedSvdBottom(const SparseMatrix& normalized, Index k,
                                 const SvdOptions& options) {
  checkRank(normalized, k);
  const Index big = std::max(normalized.rows(), normalized.cols());
  SpectralBasis basis =
      big <= options.dense_threshold
          ? denseSvd(normalized, k, SpectralEnd::Bottom, options)
          : iterativeBottom(normalized, k, options);
  verifyBasis(normalized, basis);
  return basis;
}

namespace {

constexpr char kMagic[4] = {'S', 'R', 'S', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void writeRaw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool readRaw(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<bool>(in);
}

}  // namespace

std::filesystem::path basisCachePath(const std::filesystem::path& dir,
                                     std::uint64_t matrix_hash, Index k,
                                     SpectralEnd end) {
  std::ostringstream name;
  name << std::hex << matrix_hash << std::dec << "-"
       << (end == SpectralEnd::Top ? "top" : "bottom") << k << ".svb";
  return dir / name.str();
}

void saveBasis(const std::filesystem::path& file, const SpectralBasis& basis,
               Index m, Index n) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write basis cache: " + file.string());

  out.write(kMagic, 4);
  writeRaw(out, kVersion);
  writeRaw(out, static_cast<std::uint64_t>(m));
  writeRaw(out, static_cast<std::uint64_t>(n));
  writeRaw(out, static_cast<std::uint64_t>(basis.k()));
  writeRaw(out, static_cast<std::uint8_t>(
                    basis.end == SpectralEnd::Top ? 0 : 1));
  for (Index j = 0; j < basis.k(); ++j) writeRaw(out, basis.singular_values(j));
  for (Index j = 0; j < basis.k(); ++j)
    for (Index i = 0; i < basis.item_vectors.rows(); ++i)
      writeRaw(out, basis.item_vectors(i, j));
  if (!out) throw DataError("short write to basis cache: " + file.string());
}

std::optional<SpectralBasis> loadBasis(const std::filesystem::path& file,
                                       Index expect_m, Index expect_n) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) return std::nullopt;
  std::uint32_t version = 0;
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  std::uint8_t end_tag = 0;
  if (!readRaw(in, version) || version != kVersion) return std::nullopt;
  if (!readRaw(in, m) || !readRaw(in, n) || !readRaw(in, k) ||
      !readRaw(in, end_tag))
    return std::nullopt;
  if (m != static_cast<std::uint64_t>(expect_m) ||
      n != static_cast<std::uint64_t>(expect_n) || k == 0 || end_tag > 1)
    return std::nullopt;

  SpectralBasis basis;
  basis.end = end_tag == 0 ? SpectralEnd::Top : SpectralEnd::Bottom;
  basis.singular_values = Vector(static_cast<Index>(k));
  basis.item_vectors = DenseMatrix(static_cast<Index>(n),
                                   static_cast<Index>(k));
  for (std::uint64_t j = 0; j < k; ++j)
    if (!readRaw(in, basis.singular_values(static_cast<Index>(j))))
      return std::nullopt;
  for (std::uint64_t j = 0; j < k; ++j)
    for (std::uint64_t i = 0; i < n; ++i)
      if (!readRaw(in, basis.item_vectors(static_cast<Index>(i),
                                          static_cast<Index>(j))))
        return std::nullopt;
  return basis;
}

}  // namespace specrec
