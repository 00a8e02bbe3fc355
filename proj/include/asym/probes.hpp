#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asym/dataset.hpp"
#include "asym/model.hpp"
#include "asym/tensor.hpp"

namespace asym::probes {

/// Linear softmax classifier p = softmax(W h) over a fixed feature set.
struct SoftmaxProbe {
  Tensor weights;   // (C, d)
  Tensor features;  // (N, d)
  std::vector<int> labels;

  std::size_t classes() const { return weights.dim(0); }
  std::size_t dims() const { return weights.dim(1); }
  std::size_t samples() const { return labels.size(); }
  std::span<const double> sample(std::size_t n) const {
    return features.values().subspan(n * dims(), dims());
  }
};

std::vector<double> softmax_probs(const Tensor& W, std::span<const double> h);

// -log p_y for one sample.
double sample_loss(const Tensor& W, std::span<const double> h, int y);

// Row c is -(1{c = y} - p_c) h.
Tensor softmax_grad(const Tensor& W, std::span<const double> h, int y);

struct HessianTrace {
  double tr_p = 0.0;  // sum_c p_c (1 - p_c)
  double tr_h = 0.0;  // tr_p * ||h||^2
};
HessianTrace hessian_trace(const Tensor& W, std::span<const double> h);

// eta^T H eta with H = (diag(p) - p p^T) kron h h^T, without forming H:
// with u = eta h it equals sum_c p_c u_c^2 - (sum_c p_c u_c)^2.
double hessian_quadratic(const Tensor& W, std::span<const double> h, const Tensor& eta);

struct ProbeTrainConfig {
  double l2 = 1e-3;
  double lr = 0.5;
  std::size_t iterations = 500;
  bool bias_feature = true;  // append a constant 1 to every sample
};

// Full-batch gradient descent on mean CE + l2/2 ||W||^2 from W = 0.
SoftmaxProbe train_linear_probe(const Dataset& data, const ProbeTrainConfig& cfg = {});

// Same feature transform the probe was trained with, applied to other data.
SoftmaxProbe with_features(const SoftmaxProbe& probe, const Dataset& data, bool bias_feature = true);

struct SoftmaxMetricsRow {
  double lambda = 0.0;
  double error = 0.0;
  double ce = 0.0;
  double tr_p = 0.0;          // E_x tr(diag(p) - p p^T)
  double tr_h = 0.0;          // mean over samples of tr H
  double first_order = 0.0;   // <eta, g_lambda>, g the mean gradient
  double second_order = 0.0;  // mean over samples of eta^T H eta
};

// Perturbs W by lambda * eta with eta = |eps| * sign(W) if sign_consistent,
// eps otherwise.
std::vector<SoftmaxMetricsRow> softmax_metrics(const SoftmaxProbe& probe, const Tensor& eps,
                                               const std::vector<double>& lambdas,
                                               bool sign_consistent);

struct ReluSimConfig {
  std::size_t dims = 100;
  double a = 0.1;
  std::size_t trials = 10000;
  std::vector<double> lambdas = {-1.0, -0.5, 0.0, 0.5, 1.0};
  std::size_t bins = 40;
};

struct ReluSimRow {
  double lambda = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double active_fraction = 0.0;  // share of values > 0
  std::vector<std::size_t> counts;
};

struct ReluSimResult {
  double h_norm_sq = 0.0;
  double sign_term_mean = 0.0;  // mean of sign(w)^T h over the same draws
  std::vector<double> bin_edges;  // shared by all rows, bins + 1 entries
  std::vector<ReluSimRow> rows;
};

// h ~ G(0, 1)^d fixed, w = a h + delta with delta ~ G(0, 1)^d per trial;
// reports the distribution of (w + lambda sign(w))^T h for every lambda
// using the same draws.
ReluSimResult relu_sim(const ReluSimConfig& cfg, std::uint64_t seed);

struct ActivationConfusion {
  std::size_t aa = 0;  // active in base, active in perturbed
  std::size_t ai = 0;
  std::size_t ia = 0;
  std::size_t ii = 0;
  double diag_sum = 0.0;  // (aa + ii) / total
  std::size_t total() const { return aa + ai + ia + ii; }
};

// Compares pre-activation > 0 at the named ReLU layer across all units and samples.
ActivationConfusion activation_confusion(const Model& base, const Model& perturbed,
                                         const Dataset& data, const std::string& layer_tag);

struct GradientAlignment {
  double cosine = 0.0;
  bool zero_gradient = false;
};

// cosine(sign(theta), gradient); reported as 0 with the flag set if the gradient is zero.
GradientAlignment sign_gradient_cosine(const ParamVector& theta, const ParamVector& gradient);

// Full-dataset CE gradient (one Train-mode batch over all samples) against sign(theta).
GradientAlignment gradient_orthogonality(const Model& model, const Dataset& data);

// theta + lambda * direction for every lambda, each with BN statistics
// recomputed on `calibration`, compared against the recomputed base model.
std::vector<std::pair<double, ActivationConfusion>> confusion_sweep(
    const Model& base, const ParamVector& direction, const std::vector<double>& lambdas,
    const Dataset& data, const Dataset& calibration, const std::string& layer_tag);

// G(0, 1) entries shaped like the probe weights.
Tensor probe_noise(const SoftmaxProbe& probe, std::uint64_t seed);

// w + lambda * sign(w) for every lambda.
std::vector<std::vector<double>> weight_pattern_sweep(std::span<const double> w,
                                                      const std::vector<double>& lambdas);

}  // namespace asym::probes
