#include "asym/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "asym/errors.hpp"
#include "asym/nn.hpp"
#include "asym/rng.hpp"

namespace asym::probes {

namespace {

inline double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

void check_probe_shapes(const Tensor& W, std::span<const double> h) {
  if (W.rank() != 2 || W.dim(1) != h.size())
    throw ShapeError("probe weights " + shape_string(W.shape()) + " vs feature length " +
                     std::to_string(h.size()));
}

}  // namespace

std::vector<double> softmax_probs(const Tensor& W, std::span<const double> h) {
  check_probe_shapes(W, h);
  const std::size_t C = W.dim(0), d = W.dim(1);
  std::vector<double> z(C);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += W.at(c, i) * h[i];
    z[c] = acc;
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - mx));
  for (double& v : z) v /= sum;
  return z;
}

double sample_loss(const Tensor& W, std::span<const double> h, int y) {
  check_probe_shapes(W, h);
  const std::size_t C = W.dim(0), d = W.dim(1);
  std::vector<double> z(C);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += W.at(c, i) * h[i];
    z[c] = acc;
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return mx + std::log(sum) - z.at(static_cast<std::size_t>(y));
}

Tensor softmax_grad(const Tensor& W, std::span<const double> h, int y) {
  const auto p = softmax_probs(W, h);
  if (y < 0 || static_cast<std::size_t>(y) >= p.size()) throw ShapeError("label out of range");
  Tensor g(W.shape());
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double coef = -((static_cast<std::size_t>(y) == c ? 1.0 : 0.0) - p[c]);
    for (std::size_t i = 0; i < h.size(); ++i) g.at(c, i) = coef * h[i];
  }
  return g;
}

HessianTrace hessian_trace(const Tensor& W, std::span<const double> h) {
  const auto p = softmax_probs(W, h);
  HessianTrace t;
  for (double pc : p) t.tr_p += pc * (1.0 - pc);
  double hh = 0.0;
  for (double v : h) hh += v * v;
  t.tr_h = t.tr_p * hh;
  return t;
}

double hessian_quadratic(const Tensor& W, std::span<const double> h, const Tensor& eta) {
  if (eta.shape() != W.shape()) throw ShapeError("eta must be shaped like W");
  const auto p = softmax_probs(W, h);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    double u = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) u += eta.at(c, i) * h[i];
    s1 += p[c] * u * u;
    s2 += p[c] * u;
  }
  // Non-negative analytically; clamp rounding noise.
  return std::max(0.0, s1 - s2 * s2);
}

SoftmaxProbe with_features(const SoftmaxProbe& probe, const Dataset& data, bool bias_feature) {
  const std::size_t N = data.size(), raw = data.features.row_size();
  const std::size_t d = raw + (bias_feature ? 1 : 0);
  SoftmaxProbe out;
  out.weights = probe.weights;
  out.features = Tensor({N, d});
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(data.features.data() + n * raw, raw, out.features.data() + n * d);
    if (bias_feature) out.features.at(n, raw) = 1.0;
  }
  out.labels = data.labels;
  if (out.weights.rank() == 2 && out.weights.dim(1) != d)
    throw ShapeError("probe feature width does not match dataset");
  return out;
}

SoftmaxProbe train_linear_probe(const Dataset& data, const ProbeTrainConfig& cfg) {
  data.validate();
  if (data.empty()) throw ConfigError("train_linear_probe: empty dataset");
  SoftmaxProbe probe;
  const std::size_t d = data.features.row_size() + (cfg.bias_feature ? 1 : 0);
  probe.weights = Tensor({data.num_classes, d});
  probe = with_features(probe, data, cfg.bias_feature);
  const std::size_t N = probe.samples(), C = probe.classes();
  Tensor grad(probe.weights.shape());
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::fill(grad.storage().begin(), grad.storage().end(), 0.0);
    for (std::size_t n = 0; n < N; ++n) {
      const auto h = probe.sample(n);
      const auto p = softmax_probs(probe.weights, h);
      for (std::size_t c = 0; c < C; ++c) {
        const double coef = p[c] - (static_cast<std::size_t>(probe.labels[n]) == c ? 1.0 : 0.0);
        for (std::size_t i = 0; i < d; ++i) grad.at(c, i) += coef * h[i];
      }
    }
    for (std::size_t k = 0; k < grad.size(); ++k)
      probe.weights[k] -= cfg.lr * (grad[k] / static_cast<double>(N) + cfg.l2 * probe.weights[k]);
  }
  return probe;
}

std::vector<SoftmaxMetricsRow> softmax_metrics(const SoftmaxProbe& probe, const Tensor& eps,
                                               const std::vector<double>& lambdas,
                                               bool sign_consistent) {
  if (eps.shape() != probe.weights.shape()) throw ShapeError("eps must be shaped like W");
  Tensor eta = eps;
  if (sign_consistent)
    for (std::size_t k = 0; k < eta.size(); ++k) eta[k] = std::fabs(eps[k]) * sign_of(probe.weights[k]);

  std::vector<SoftmaxMetricsRow> rows(lambdas.size());
  const auto L = static_cast<std::int64_t>(lambdas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t li = 0; li < L; ++li) {
    const double lambda = lambdas[li];
    Tensor W = probe.weights;
    for (std::size_t k = 0; k < W.size(); ++k) W[k] += lambda * eta[k];
    SoftmaxMetricsRow row;
    row.lambda = lambda;
    Tensor g(W.shape());
    std::size_t wrong = 0;
    const std::size_t N = probe.samples();
    for (std::size_t n = 0; n < N; ++n) {
      const auto h = probe.sample(n);
      const int y = probe.labels[n];
      const auto p = softmax_probs(W, h);
      const auto best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      wrong += best != y;
      row.ce += -std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
      double trp = 0.0;
      for (double pc : p) trp += pc * (1.0 - pc);
      double hh = 0.0;
      for (double v : h) hh += v * v;
      row.tr_p += trp;
      row.tr_h += trp * hh;
      for (std::size_t c = 0; c < p.size(); ++c) {
        const double coef = p[c] - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0);
        for (std::size_t i = 0; i < h.size(); ++i) g.at(c, i) += coef * h[i];
      }
      row.second_order += hessian_quadratic(W, h, eta);
    }
    const double inv = 1.0 / static_cast<double>(N);
    row.error = static_cast<double>(wrong) * inv;
    row.ce *= inv;
    row.tr_p *= inv;
    row.tr_h *= inv;
    row.second_order *= inv;
    double fo = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) fo += eta[k] * g[k] * inv;
    row.first_order = fo;
    rows[li] = row;
  }
  return rows;
}

ReluSimResult relu_sim(const ReluSimConfig& cfg, std::uint64_t seed) {
  if (cfg.trials < 1 || cfg.dims < 1) throw ConfigError("relu_sim needs trials >= 1 and dims >= 1");
  if (cfg.bins < 1) throw ConfigError("relu_sim needs at least one histogram bin");
  Rng rng = make_rng(seed, "relu-sim");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> h(cfg.dims);
  for (double& v : h) v = gauss(rng);

  ReluSimResult out;
  for (double v : h) out.h_norm_sq += v * v;
  const std::size_t L = cfg.lambdas.size();
  std::vector<std::vector<double>> values(L, std::vector<double>(cfg.trials));
  std::vector<double> w(cfg.dims);
  double sign_sum = 0.0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    for (std::size_t i = 0; i < cfg.dims; ++i) w[i] = cfg.a * h[i] + gauss(rng);
    double st = 0.0;
    for (std::size_t i = 0; i < cfg.dims; ++i) st += sign_of(w[i]) * h[i];
    sign_sum += st;
    for (std::size_t l = 0; l < L; ++l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < cfg.dims; ++i) acc += (w[i] + cfg.lambdas[l] * sign_of(w[i])) * h[i];
      values[l][t] = acc;
    }
  }
  out.sign_term_mean = sign_sum / static_cast<double>(cfg.trials);

  double lo = values[0][0], hi = values[0][0];
  for (const auto& v : values) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    lo = std::min(lo, *mn);
    hi = std::max(hi, *mx);
  }
  if (hi == lo) hi = lo + 1.0;
  out.bin_edges.resize(cfg.bins + 1);
  for (std::size_t b = 0; b <= cfg.bins; ++b)
    out.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(cfg.bins);

  for (std::size_t l = 0; l < L; ++l) {
    ReluSimRow row;
    row.lambda = cfg.lambdas[l];
    const auto& v = values[l];
    const double n = static_cast<double>(v.size());
    row.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    std::size_t active = 0;
    row.counts.assign(cfg.bins, 0);
    for (double x : v) {
      ss += (x - row.mean) * (x - row.mean);
      active += x > 0.0;
      auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(cfg.bins));
      row.counts[std::min(b, cfg.bins - 1)]++;
    }
    row.std = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.active_fraction = static_cast<double>(active) / n;
    out.rows.push_back(std::move(row));
  }
  return out;
}

ActivationConfusion activation_confusion(const Model& base, const Model& perturbed,
                                         const Dataset& data, const std::string& layer_tag) {
  if (!(base.arch() == perturbed.arch())) throw ShapeError("activation_confusion: architectures differ");
  const std::size_t layer = base.arch().layer_index(layer_tag);
  if (!std::holds_alternative<layers::Relu>(base.arch().layers()[layer]))
    throw ConfigError("layer '" + layer_tag + "' is not a ReLU");
  ActivationConfusion out;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  constexpr std::size_t kBatch = 512;
  for (std::size_t start = 0; start < idx.size(); start += kBatch) {
    const std::size_t len = std::min(kBatch, idx.size() - start);
    const Tensor batch = data.batch({idx.data() + start, len});
    const Tensor a = forward_until(base, batch, layer);
    const Tensor b = forward_until(perturbed, batch, layer);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const bool pa = a[k] > 0.0, pb = b[k] > 0.0;
      if (pa && pb) ++out.aa;
      else if (pa) ++out.ai;
      else if (pb) ++out.ia;
      else ++out.ii;
    }
  }
  const std::size_t total = out.total();
  out.diag_sum = total ? static_cast<double>(out.aa + out.ii) / static_cast<double>(total) : 1.0;
  return out;
}

GradientAlignment sign_gradient_cosine(const ParamVector& theta, const ParamVector& gradient) {
  require_same_layout(theta, gradient, "sign_gradient_cosine");
  if (params::norm(gradient) == 0.0) return {0.0, true};
  return {params::cosine(params::sign(theta), gradient), false};
}

GradientAlignment gradient_orthogonality(const Model& model, const Dataset& data) {
  if (data.empty()) throw ConfigError("gradient_orthogonality: empty dataset");
  Model m = model;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  ForwardCache cache;
  forward(m, data.batch(idx), Mode::Train, &cache);
  const ParamVector grad = backward(m, cache, data.labels);
  return sign_gradient_cosine(m.params(), grad);
}

std::vector<std::pair<double, ActivationConfusion>> confusion_sweep(
    const Model& base, const ParamVector& direction, const std::vector<double>& lambdas,
    const Dataset& data, const Dataset& calibration, const std::string& layer_tag) {
  require_same_layout(base.params(), direction, "confusion_sweep");
  const Model anchor = bn_recompute(base, calibration);
  std::vector<std::pair<double, ActivationConfusion>> out(lambdas.size());
  const auto L = static_cast<std::int64_t>(lambdas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < L; ++i) {
    const Model pert =
        bn_recompute(base.with_params(params::axpy(base.params(), lambdas[i], direction)), calibration);
    out[i] = {lambdas[i], activation_confusion(anchor, pert, data, layer_tag)};
  }
  return out;
}

Tensor probe_noise(const SoftmaxProbe& probe, std::uint64_t seed) {
  Rng rng = make_rng(seed, "probe-noise");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor eps(probe.weights.shape());
  for (double& v : eps.storage()) v = gauss(rng);
  return eps;
}

std::vector<std::vector<double>> weight_pattern_sweep(std::span<const double> w,
                                                      const std::vector<double>& lambdas) {
  std::vector<std::vector<double>> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    std::vector<double> v(w.begin(), w.end());
    for (double& x : v) x += l * sign_of(x);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace asym::probes
