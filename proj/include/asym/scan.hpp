#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asym/dataset.hpp"
#include "asym/model.hpp"
#include "asym/nn.hpp"
#include "asym/noise.hpp"
#include "asym/param_space.hpp"

namespace asym {

enum class Normalization { NS, FilterNS, Raw };
std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

// `points` evenly spaced values from lo to hi inclusive. Symmetric grids
// around 0 contain an exact 0.
std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

struct ScanConfig {
  std::vector<double> lambdas = uniform_grid(-1.0, 1.0, 41);
  double s = 1.0;
  Normalization normalization = Normalization::NS;
  bool bn_recompute = true;

  // Grid sorted, within [-1, 1], containing 0 and symmetric about it.
  void validate() const;
};

struct ScanPoint {
  double lambda = 0.0;
  double error = 0.0;
  double ce = 0.0;
  bool non_finite = false;  // evaluation blew up; recorded as error 1, ce +inf
};

struct ScanResult {
  std::vector<ScanPoint> points;
  NoiseSpec noise;
  ScanConfig config;
  std::string checkpoint_id;
};

// s * normalized(eps) for the configured normalization.
ParamVector scan_direction(const ParamVector& eps, const ParamVector& theta, Normalization n,
                           double s);

// Evaluates a copy of `base` with the given parameters on `eval`, after
// recomputing BN statistics on `calibration` if requested. Non-finite
// evaluations are clipped instead of thrown.
ScanPoint evaluate_point(const Model& base, ParamVector params, bool recompute,
                         const Dataset& eval, const Dataset& calibration);

// theta_f + lambda * s * normalized(eps) for every lambda in the grid. Grid
// points run in parallel on cloned models; the input model is not modified.
ScanResult scan_1d(const Model& model, const NoiseVector& noise, const ScanConfig& cfg,
                   const Dataset& eval, const Dataset& calibration);
ScanResult scan_1d(const Model& model, const NoiseVector& noise, const ScanConfig& cfg,
                   const Dataset& data);

enum class Metric { Error, CE };

struct Asymmetry {
  double pos_mean = 0.0;  // mean over lambda > 0
  double neg_mean = 0.0;  // mean over lambda < 0
  double gap = 0.0;       // neg_mean - pos_mean
};

// lambda == 0 is excluded from both sides. Requires a symmetric grid.
Asymmetry asymmetry_stats(const ScanResult& result, Metric metric = Metric::Error);

struct InterpolationResult {
  ScanResult curve;
  // Sign consistency of each endpoint with eps = theta_2 - theta_1.
  SignConsistency ssr_first;
  SignConsistency ssr_second;
};

// (1 - lambda) * theta_1 + lambda * theta_2 with BN recompute at every point.
InterpolationResult interpolate_two(const Model& first, const Model& second,
                                    const std::vector<double>& lambdas, const Dataset& eval,
                                    const Dataset& calibration);

struct SoupConfig {
  std::vector<std::size_t> checkpoints = {1, 2, 3, 5, 10, 20, 30, 50};
  TrainConfig train;
  std::uint64_t split_seed = 0;
  // Interpolation curve per checkpoint; empty skips the curves.
  std::vector<double> curve_lambdas = uniform_grid(-1.0, 2.0, 13);
};

struct SoupRow {
  std::size_t epoch = 0;
  double ssr_ia = 0.0;
  double ssr_ib = 0.0;
  double ssr_ab = 0.0;
  double acc_a = 0.0;
  double acc_b = 0.0;
  double acc_mid = 0.0;
  double gap = 0.0;  // Acc(mid) - (Acc(A) + Acc(B)) / 2
  ScanResult curve;  // error over curve_lambdas, lambda 0 = A, 1 = B
};

struct SoupReport {
  std::vector<SoupRow> rows;
};

// Trains theta_A and theta_B from the shared `init` on disjoint stratified
// halves of `train` and reports sign consistency and the midpoint gap at
// each checkpoint epoch (epoch 0 means the untouched init).
SoupReport soup_experiment(const Model& init, const Dataset& train, const Dataset& test,
                           const SoupConfig& cfg);

struct BnInitConfig {
  TrainConfig train;
  ScanConfig scan;
  std::uint64_t model_seed = 0;
  std::uint64_t noise_seed = 0;
};

struct BnInitReport {
  BnInit init = BnInit::Ones;
  std::vector<double> init_weights;   // all BN weights at initialization
  std::vector<double> final_weights;  // after training
  double positive_init = 0.0;
  double positive_final = 0.0;
  ScanResult ns_scan;  // eps in {0, 1}, NS
  ScanResult filter_scan;  // eps in {0, 1}, filter NS
  Asymmetry ns_asymmetry;
  Asymmetry filter_asymmetry;
  double train_error = 0.0;
};

std::vector<BnInitReport> bn_init_study(const Architecture& arch, const Dataset& train,
                                        const Dataset& test, std::span<const BnInit> kinds,
                                        const BnInitConfig& cfg);

// All BN weight values of a parameter vector, in layout order.
std::vector<double> bn_weights(const ParamVector& params);

}  // namespace asym
