#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "asym/errors.hpp"
#include "asym/nn.hpp"
#include "asym/rng.hpp"

namespace asym {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

double scheduled_lr(const TrainConfig& cfg, std::size_t epoch) {
  if (cfg.schedule == LrSchedule::Constant || cfg.epochs == 0) return cfg.lr;
  const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
  return 0.5 * cfg.lr * (1.0 + std::cos(std::numbers::pi * t));
}

void sgd_step(ParamVector& params, ParamVector& velocity, const ParamVector& gradient, double lr,
              double momentum, double weight_decay) {
  require_same_layout(params, gradient, "sgd_step");
  require_same_layout(params, velocity, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + gradient[i] + weight_decay * params[i];
    params[i] -= lr * velocity[i];
  }
}

TrainResult train(Model model, const Dataset& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  data.validate();
  if (data.empty()) throw ConfigError("train: empty dataset");
  if (data.num_classes != model.arch().num_classes())
    throw ShapeError("dataset class count does not match the model head");

  TrainResult result{std::move(model), {}};
  Model& m = result.model;
  ParamVector velocity(m.arch().param_layout(), 0.0);
  const std::size_t N = data.size();
  const bool has_bn = m.arch().bn_count() > 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    Rng rng = make_rng(cfg.seed, "shuffle", epoch);
    const auto order = random_permutation(N, rng);
    double loss_sum = 0.0;
    std::size_t wrong = 0, seen = 0;
    for (std::size_t start = 0; start < N; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, N - start);
      // A single-sample batch has no usable BN statistics.
      if (len == 1 && has_bn && N > 1) continue;
      const std::span<const std::size_t> idx(order.data() + start, len);
      const Tensor batch = data.batch(idx);
      const auto labels = data.batch_labels(idx);
      ForwardCache cache;
      Tensor logits;
      try {
        logits = forward(m, batch, Mode::Train, &cache);
      } catch (const NumericError&) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                           ": non-finite activations");
      }
      const auto loss = softmax_cross_entropy(logits, labels);
      if (!std::isfinite(loss.loss))
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                           ": loss is " + std::to_string(loss.loss));
      loss_sum += loss.loss * static_cast<double>(len);
      for (std::size_t n = 0; n < len; ++n) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.dim(1); ++c)
          if (logits.at(n, c) > logits.at(n, best)) best = c;
        wrong += static_cast<int>(best) != labels[n];
      }
      seen += len;
      ParamVector grad = backward(m, cache, labels);
      if (hooks.extra_gradient) hooks.extra_gradient(m.params(), grad);
      sgd_step(m.mutable_params(), velocity, grad, lr, cfg.momentum, cfg.weight_decay);
    }
    if (!m.params().all_finite())
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                         ": non-finite parameters");
    const double denom = seen ? static_cast<double>(seen) : 1.0;
    result.log.push_back({epoch + 1, lr, loss_sum / denom, static_cast<double>(wrong) / denom});
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch + 1, m);
  }
  return result;
}

Evaluation evaluate(const Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw ConfigError("evaluate: empty dataset");
  if (data.num_classes != model.arch().num_classes())
    throw ShapeError("dataset class count does not match the model head");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double ce = 0.0;
  std::size_t wrong = 0;
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, idx.size() - start);
    const std::span<const std::size_t> part(idx.data() + start, len);
    const Tensor logits = forward(model, data.batch(part));
    const auto labels = data.batch_labels(part);
    ce += softmax_cross_entropy(logits, labels).loss * static_cast<double>(len);
    for (std::size_t n = 0; n < len; ++n) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.dim(1); ++c)
        if (logits.at(n, c) > logits.at(n, best)) best = c;
      wrong += static_cast<int>(best) != labels[n];
    }
  }
  const double n = static_cast<double>(data.size());
  if (!std::isfinite(ce)) throw NumericError("evaluate: non-finite cross-entropy");
  return {static_cast<double>(wrong) / n, ce / n};
}

Model bn_recompute(Model model, const Dataset& data, std::size_t batch_size) {
  const auto& arch = model.arch();
  if (arch.bn_count() == 0) return model;
  if (data.empty()) throw ConfigError("bn_recompute: empty dataset");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  for (std::size_t layer = 0; layer < arch.layers().size(); ++layer) {
    const auto* bn = std::get_if<layers::BatchNorm>(&arch.layers()[layer]);
    if (!bn) continue;
    const std::size_t C = bn->channels;
    std::vector<double> mean(C, 0.0), m2(C, 0.0);
    double count = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
      const std::size_t len = std::min(batch_size, idx.size() - start);
      const Tensor h = forward_until(model, data.batch({idx.data() + start, len}), layer);
      const std::size_t spatial = h.row_size() / C;
      const double nb = static_cast<double>(len * spatial);
      for (std::size_t c = 0; c < C; ++c) {
        double bm = 0.0;
        for (std::size_t n = 0; n < len; ++n)
          for (std::size_t p = 0; p < spatial; ++p) bm += h[(n * C + c) * spatial + p];
        bm /= nb;
        double bm2 = 0.0;
        for (std::size_t n = 0; n < len; ++n)
          for (std::size_t p = 0; p < spatial; ++p) {
            const double d = h[(n * C + c) * spatial + p] - bm;
            bm2 += d * d;
          }
        // Chan et al. pairwise merge of (count, mean, M2).
        const double total = count + nb;
        const double delta = bm - mean[c];
        mean[c] += delta * nb / total;
        m2[c] += bm2 + delta * delta * count * nb / total;
      }
      count += nb;
    }
    auto& state = model.bn_state()[arch.info()[layer].bn_index];
    for (std::size_t c = 0; c < C; ++c) {
      state.running_mean[c] = mean[c];
      state.running_var[c] = m2[c] / count;
    }
  }
  return model;
}

}  // namespace asym
