#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "asym/dataset.hpp"
#include "asym/datasets.hpp"
#include "asym/errors.hpp"
#include "asym/rng.hpp"

namespace asym {

std::vector<std::size_t> Dataset::sample_shape() const {
  if (features.rank() < 2) return {features.row_size()};
  return {features.shape().begin() + 1, features.shape().end()};
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  const std::size_t row = features.row_size();
  std::vector<std::size_t> shape = features.shape();
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw ShapeError("dataset index out of range");
    std::copy_n(features.data() + indices[k] * row, row, out.data() + k * row);
  }
  return out;
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(labels.at(i));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  return {batch(indices), batch_labels(indices), num_classes};
}

void Dataset::validate() const {
  if (features.rank() < 1 || features.dim(0) != labels.size())
    throw ShapeError("dataset features/labels count mismatch");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw ConfigError("dataset label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
}

std::vector<std::size_t> class_histogram(std::span<const int> labels, std::size_t num_classes) {
  std::vector<std::size_t> h(num_classes, 0);
  for (int y : labels) h.at(static_cast<std::size_t>(y))++;
  return h;
}

std::pair<Dataset, Dataset> split_halves_stratified(const Dataset& data, std::uint64_t seed) {
  Rng rng = make_rng(seed, "stratified-halves");
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  std::vector<std::size_t> a, b;
  bool odd_to_a = true;
  for (auto& members : by_class) {
    shuffle_in_place(members, rng);
    std::size_t half = members.size() / 2;
    // Alternate which half receives the odd sample so the halves stay balanced.
    if (members.size() % 2 == 1) {
      if (odd_to_a) ++half;
      odd_to_a = !odd_to_a;
    }
    a.insert(a.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(half));
    b.insert(b.end(), members.begin() + static_cast<std::ptrdiff_t>(half), members.end());
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {data.subset(a), data.subset(b)};
}

DataSplit split_train_test(const Dataset& data, double train_fraction, std::uint64_t seed) {
  Rng rng = make_rng(seed, "train-test-split");
  auto order = random_permutation(data.size(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> te(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(tr.begin(), tr.end());
  std::sort(te.begin(), te.end());
  return {data.subset(tr), data.subset(te)};
}

std::string default_data_dir() {
#ifdef ASYM_DATA_DIR
  return ASYM_DATA_DIR;
#else
  return "data";
#endif
}

DataSplit load_digits(std::uint64_t split_seed, const std::string& data_dir) {
  const std::string path = data_dir + "/digits.csv.gz";
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw FormatError("cannot open " + path);
  std::string text;
  char buf[1 << 15];
  int got;
  while ((got = gzread(f, buf, sizeof(buf))) > 0) text.append(buf, static_cast<std::size_t>(got));
  gzclose(f);
  if (got < 0) throw FormatError("corrupt gzip stream in " + path);

  std::vector<double> feats;
  std::vector<int> labels;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 65) throw FormatError("digits row with " + std::to_string(row.size()) + " columns");
    for (std::size_t j = 0; j < 64; ++j) feats.push_back(row[j] / 16.0);
    labels.push_back(static_cast<int>(row[64]));
  }
  Dataset all{Tensor({labels.size(), 64}, std::move(feats)), std::move(labels), 10};
  all.validate();
  return split_train_test(all, 0.8, split_seed);
}

DataSplit make_blobs(const BlobsParams& p) {
  if (p.classes < 2 || p.samples < p.classes || p.dims == 0)
    throw ConfigError("blobs needs classes >= 2, samples >= classes, dims >= 1");
  Rng rng = make_rng(p.seed, "blobs");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> centers(p.classes * p.dims);
  for (double& c : centers) c = 3.0 * gauss(rng);
  std::vector<double> feats(p.samples * p.dims);
  std::vector<int> labels(p.samples);
  for (std::size_t i = 0; i < p.samples; ++i) {
    const std::size_t y = i % p.classes;
    labels[i] = static_cast<int>(y);
    for (std::size_t j = 0; j < p.dims; ++j)
      feats[i * p.dims + j] = centers[y * p.dims + j] + p.spread * gauss(rng);
  }
  const auto [lo, hi] = std::minmax_element(feats.begin(), feats.end());
  const double a = *lo, span = *hi - *lo > 0 ? *hi - *lo : 1.0;
  for (double& v : feats) v = (v - a) / span;
  Dataset all{Tensor({p.samples, p.dims}, std::move(feats)), std::move(labels), p.classes};
  return split_train_test(all, 0.8, p.seed);
}

namespace {

void read_cifar_records(const std::string& path, std::size_t want, std::vector<double>& feats,
                        std::vector<int>& labels) {
  constexpr std::size_t kRecord = 1 + 3072;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<unsigned char> rec(kRecord);
  while (want > 0 && in.read(reinterpret_cast<char*>(rec.data()), kRecord)) {
    if (rec[0] > 9) throw FormatError("CIFAR-10 label byte out of range in " + path);
    labels.push_back(rec[0]);
    for (std::size_t j = 1; j < kRecord; ++j) feats.push_back(rec[j] / 255.0);
    --want;
  }
  if (in.gcount() != 0 && in.gcount() != static_cast<std::streamsize>(kRecord))
    throw FormatError("truncated CIFAR-10 record in " + path);
}

}  // namespace

DataSplit load_cifar10(const std::string& dir, std::size_t train_n, std::size_t test_n) {
  if (train_n == 0) throw ConfigError("cifar10 subset size must be positive");
  if (test_n == 0) test_n = std::max<std::size_t>(train_n / 5, 1);
  DataSplit out;
  std::vector<double> feats;
  std::vector<int> labels;
  for (int b = 1; b <= 5 && labels.size() < train_n; ++b)
    read_cifar_records(dir + "/data_batch_" + std::to_string(b) + ".bin", train_n - labels.size(),
                       feats, labels);
  if (labels.size() < train_n) throw FormatError("not enough CIFAR-10 training records in " + dir);
  out.train = {Tensor({train_n, 3, 32, 32}, std::move(feats)), std::move(labels), 10};
  feats.clear();
  labels.clear();
  read_cifar_records(dir + "/test_batch.bin", test_n, feats, labels);
  out.test = {Tensor({labels.size(), 3, 32, 32}, std::move(feats)), std::move(labels), 10};
  return out;
}

DataSplit load_dataset(const std::string& source, std::uint64_t seed) {
  std::vector<std::string> parts;
  {
    std::istringstream ss(source);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
  }
  if (parts.empty()) throw ConfigError("empty dataset source");
  auto num = [&](std::size_t i, std::size_t dflt) -> std::size_t {
    if (parts.size() <= i) return dflt;
    try {
      return static_cast<std::size_t>(std::stoull(parts[i]));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + parts[i] + "' in dataset source");
    }
  };
  if (parts[0] == "digits" || parts[0] == "embedded-digits") return load_digits(seed);
  if (parts[0] == "blobs") {
    BlobsParams p;
    p.classes = num(1, 3);
    p.samples = num(2, 300);
    p.dims = num(3, 16);
    p.seed = seed;
    return make_blobs(p);
  }
  if (parts[0] == "cifar10" || parts[0] == "cifar10-binary") {
    if (parts.size() < 2) throw ConfigError("cifar10 source needs a path: cifar10:DIR[:N]");
    return load_cifar10(parts[1], num(2, 2000));
  }
  throw ConfigError("unknown dataset source '" + source + "'");
}

}  // namespace asym
