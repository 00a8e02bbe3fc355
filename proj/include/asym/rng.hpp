#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace asym {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream key from a global seed and a purpose tag, so
// that e.g. noise draws never share a stream with shuffles or initialization.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, tag, index));
}

// FNV-1a over raw bytes; used for content hashes in manifests and tests.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace asym

#include <numeric>
#include <vector>

namespace asym {

// Fisher-Yates; explicit so the permutation only depends on the generator.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle_in_place(idx, rng);
  return idx;
}

// k distinct indices from [0, n), uniformly, in selection order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k && i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(std::min(k, n));
  return idx;
}

}  // namespace asym
