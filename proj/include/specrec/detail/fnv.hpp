// Copyright 2026 The specrec Authors
// Licensed under the Apache License, Version 2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace specrec::detail {

// FNV-1a, used for content hashes (provenance and cache keys, not crypto).
class Fnv1a {
 public:
  void mix(const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 1099511628211ULL;
    }
  }
  void mixU64(std::uint64_t v) { mix(&v, 8); }
  void mixString(const std::string& s) {
    mixU64(s.size());
    mix(s.data(), s.size());
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 1469598103934665603ULL;
};

}  // namespace specrec::detail
