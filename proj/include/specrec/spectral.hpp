// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>

#include "specrec/sparse.hpp"

namespace specrec {

enum class SpectralEnd { Top, Bottom };

// Truncated singular basis of a normalized interaction matrix: k singular
// values (descending) and the aligned item-side singular vectors (n x k).
// "Top" holds the k largest singular directions, "Bottom" the k smallest
// among the min(m, n) directions of the thin decomposition.
struct SpectralBasis {
  Vector singular_values;
  DenseMatrix item_vectors;
  SpectralEnd end = SpectralEnd::Top;

  Index k() const { return item_vectors.cols(); }

  // Sub-basis with k columns: leading columns for Top, trailing columns for
  // Bottom (both keep the "k most extreme" directions).
  SpectralBasis truncated(Index k) const;
};

struct SvdOptions {
  // Full Jacobi SVD below this size (exact to machine precision).
  Index jacobi_threshold = 256;
  // Dense divide-and-conquer SVD up to this size, iterative solver above.
  Index dense_threshold = 4096;
  double tolerance = 1e-10;
  int max_iterations = 1000;
  std::uint64_t seed = 42;
};

// Both throw ConfigError when k is out of [1, min(m, n)] and NumericError
// when the iterative solver fails to reach tolerance.
SpectralBasis truncatedSvdTop(const SparseMatrix& normalized, Index k,
                              const SvdOptions& options = {});
SpectralBasis truncatedSvdBottom(const SparseMatrix& normalized, Index k,
                                 const SvdOptions& options = {});

struct EigenPairs {
  Vector values;        // descending
  DenseMatrix vectors;  // dim x k, columns aligned with values
};

// k dominant eigenpairs of a symmetric positive-semidefinite operator given
// only through its matrix-vector product, via seeded block subspace
// iteration with Rayleigh-Ritz extraction. Throws NumericError with
// iteration diagnostics when tolerance is not reached.
EigenPairs dominantSymmetricEigenpairs(
    Index dim, Index k, const std::function<Vector(const Vector&)>& apply,
    const SvdOptions& options, const char* what);

// Optional on-disk cache. Flat little-endian binary: magic "SRSB", u32
// version, u64 m/n/k, u8 end, then k singular values and n*k column-major
// vector entries as 64-bit floats. Round-trips bit-exactly, so cache hits
// can never change results.
std::filesystem::path basisCachePath(const std::filesystem::path& dir,
                                     std::uint64_t matrix_hash, Index k,
                                     SpectralEnd end);
void saveBasis(const std::filesystem::path& file, const SpectralBasis& basis,
               Index m, Index n);
std::optional<SpectralBasis> loadBasis(const std::filesystem::path& file,
                                       Index expect_m, Index expect_n);

}  // namespace specrec
