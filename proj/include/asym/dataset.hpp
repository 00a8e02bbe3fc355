#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asym/tensor.hpp"

namespace asym {

/// Labelled samples. features has shape (N, sample dims...).
struct Dataset {
  Tensor features;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::vector<std::size_t> sample_shape() const;

  Dataset subset(std::span<const std::size_t> indices) const;
  Tensor batch(std::span<const std::size_t> indices) const;
  std::vector<int> batch_labels(std::span<const std::size_t> indices) const;

  // Throws ShapeError / ConfigError on inconsistent contents.
  void validate() const;
};

struct DataSplit {
  Dataset train;
  Dataset test;
};

// Seeded stratified split into two disjoint halves (for the soup experiment).
std::pair<Dataset, Dataset> split_halves_stratified(const Dataset& data, std::uint64_t seed);

// Seeded random train/test split with the given train fraction.
DataSplit split_train_test(const Dataset& data, double train_fraction, std::uint64_t seed);

// Per-class counts.
std::vector<std::size_t> class_histogram(std::span<const int> labels, std::size_t num_classes);

}  // namespace asym
