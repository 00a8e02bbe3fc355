#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "asym/dataset.hpp"
#include "asym/model.hpp"
#include "asym/tensor.hpp"

namespace asym {

enum class Mode { Train, Eval };

/// Activations and BN intermediates recorded by forward() for backward().
struct ForwardCache {
  struct BnCache {
    Tensor xhat;
    std::vector<double> inv_std;
  };
  std::vector<Tensor> inputs;  // inputs[i] is the input of layer i; back() is the logits
  std::vector<BnCache> bn;     // per layer index (empty for non-BN layers)
  const Model* model = nullptr;
  std::uint64_t version = 0;
  Mode mode = Mode::Eval;
};

// Train mode normalizes with batch statistics and updates running statistics
// with momentum 0.1; Eval mode uses the running statistics.
Tensor forward(Model& model, const Tensor& batch, Mode mode, ForwardCache* cache = nullptr);
Tensor forward(const Model& model, const Tensor& batch, ForwardCache* cache = nullptr);

struct SoftmaxLoss {
  double loss = 0.0;   // mean over the batch
  Tensor grad_logits;  // d loss / d logits
};
SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// Gradient of the mean cross-entropy w.r.t. all learnable parameters.
// Requires a Train-mode cache produced from this model at its current version.
ParamVector backward(const Model& model, const ForwardCache& cache, std::span<const int> labels);

enum class LrSchedule { Constant, CosineAnneal };

struct TrainConfig {
  double lr = 0.03;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  LrSchedule schedule = LrSchedule::CosineAnneal;
  std::uint64_t seed = 0;

  void validate() const;
};

double scheduled_lr(const TrainConfig& cfg, std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_error = 0.0;
};

struct TrainHooks {
  // Adds extra terms to the mini-batch gradient before the update.
  std::function<void(const ParamVector& params, ParamVector& gradient)> extra_gradient;
  // Called after each completed epoch (1-based).
  std::function<void(std::size_t epoch, const Model& model)> on_epoch_end;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
};

// Mini-batch SGD with classic momentum and coupled weight decay:
//   v <- momentum * v + g + wd * theta;  theta <- theta - lr * v
TrainResult train(Model model, const Dataset& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

// One SGD update; exposed for tests of the update rule.
void sgd_step(ParamVector& params, ParamVector& velocity, const ParamVector& gradient,
              double lr, double momentum, double weight_decay);

struct Evaluation {
  double error = 0.0;  // top-1 error in [0, 1]
  double ce = 0.0;     // mean -log p_y
};

Evaluation evaluate(const Model& model, const Dataset& data, std::size_t batch_size = 512);

// Replaces every BN layer's running statistics with the exact per-channel
// mean and (population) variance of its input over the whole dataset.
Model bn_recompute(Model model, const Dataset& data, std::size_t batch_size = 512);

// Forward in Eval mode up to (excluding) layer `stop`; returns that layer's input.
Tensor forward_until(const Model& model, const Tensor& batch, std::size_t stop);

}  // namespace asym
