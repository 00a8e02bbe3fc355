#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "asym/dataset.hpp"

namespace asym {

// Directory holding the bundled digits CSV (set at build time).
std::string default_data_dir();

// The 1797-sample 8x8 digits set; features scaled to [0, 1], seeded 80/20 split.
DataSplit load_digits(std::uint64_t split_seed = 0, const std::string& data_dir = default_data_dir());

struct BlobsParams {
  std::size_t classes = 3;
  std::size_t samples = 300;
  std::size_t dims = 16;
  double spread = 1.0;  // within-class std relative to unit-variance centers
  std::uint64_t seed = 0;
};

// Gaussian blobs, class-balanced, features min-max scaled to [0, 1], 80/20 split.
DataSplit make_blobs(const BlobsParams& params);

// CIFAR-10 binary batches (data_batch_1..5.bin, test_batch.bin), 1 + 3072
// bytes per record. Takes the first train_n training records and test_n test
// records (test_n == 0 means train_n / 5). Features are (3, 32, 32) in [0, 1].
DataSplit load_cifar10(const std::string& dir, std::size_t train_n, std::size_t test_n = 0);

// "digits" | "embedded-digits" | "blobs[:C:N:D]" | "cifar10:PATH[:N]".
DataSplit load_dataset(const std::string& source, std::uint64_t seed = 0);

}  // namespace asym
