// Forward and backward passes over the fixed layer set.

#include <algorithm>
#include <cmath>

#include "asym/errors.hpp"
#include "asym/kernels.hpp"
#include "asym/nn.hpp"

namespace asym {

namespace {

constexpr double kBnMomentum = 0.1;

struct ChannelView {
  std::size_t batch;
  std::size_t channels;
  std::size_t spatial;  // H*W, 1 for flat features
  std::size_t index(std::size_t n, std::size_t c, std::size_t p) const {
    return (n * channels + c) * spatial + p;
  }
};

ChannelView channel_view(const Tensor& x, std::size_t channels) {
  const std::size_t batch = x.dim(0);
  return {batch, channels, x.row_size() / channels};
}

kernels::ConvDims conv_dims(const layers::Conv2d& c, const std::vector<std::size_t>& in_shape,
                            std::size_t batch) {
  return {batch, c.in_ch, c.out_ch, in_shape[1], in_shape[2], c.kernel, c.stride, c.pad};
}

std::vector<std::size_t> batch_shape(std::size_t batch, const std::vector<std::size_t>& sample) {
  std::vector<std::size_t> s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

Tensor bn_forward(const Model& model, const LayerInfo& info, const layers::BatchNorm& spec,
                  const Tensor& x, Mode mode, BnState* update, ForwardCache::BnCache* cache) {
  const auto& groups = model.arch().param_layout()->groups();
  const auto w = model.params().group(groups[info.weight_group]);
  const auto b = model.params().group(groups[info.bias_group]);
  const ChannelView v = channel_view(x, spec.channels);
  const double m = static_cast<double>(v.batch * v.spatial);
  Tensor y(x.shape());
  Tensor xhat;
  if (cache) xhat = Tensor(x.shape());
  std::vector<double> inv_std(spec.channels);
  const auto& state = model.bn_state()[info.bn_index];
  for (std::size_t c = 0; c < spec.channels; ++c) {
    double mean, var;
    if (mode == Mode::Train) {
      mean = 0.0;
      for (std::size_t n = 0; n < v.batch; ++n)
        for (std::size_t p = 0; p < v.spatial; ++p) mean += x[v.index(n, c, p)];
      mean /= m;
      var = 0.0;
      for (std::size_t n = 0; n < v.batch; ++n)
        for (std::size_t p = 0; p < v.spatial; ++p) {
          const double d = x[v.index(n, c, p)] - mean;
          var += d * d;
        }
      var /= m;
      if (update) {
        const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
        update->running_mean[c] = (1.0 - kBnMomentum) * update->running_mean[c] + kBnMomentum * mean;
        update->running_var[c] = (1.0 - kBnMomentum) * update->running_var[c] + kBnMomentum * unbiased;
      }
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    const double is = 1.0 / std::sqrt(var + model.bn_epsilon());
    inv_std[c] = is;
    for (std::size_t n = 0; n < v.batch; ++n)
      for (std::size_t p = 0; p < v.spatial; ++p) {
        const std::size_t k = v.index(n, c, p);
        const double h = (x[k] - mean) * is;
        if (cache) xhat[k] = h;
        y[k] = w[c] * h + b[c];
      }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Tensor run_forward(const Model& model, const Tensor& batch, Mode mode, ForwardCache* cache,
                   std::vector<BnState>* bn_update, std::size_t stop) {
  const auto& arch = model.arch();
  const auto& in_shape = arch.input_shape();
  if (batch.rank() < 1 || batch.dim(0) == 0 || batch.row_size() != shape_product(in_shape))
    throw ShapeError("batch shape " + shape_string(batch.shape()) +
                     " does not match architecture input " + shape_string(in_shape));
  const std::size_t N = batch.dim(0);
  const auto& groups = arch.param_layout()->groups();
  const auto& theta = model.params();

  if (cache) {
    cache->inputs.clear();
    cache->bn.assign(arch.layers().size(), {});
    cache->model = &model;
    cache->version = model.version();
    cache->mode = mode;
  }

  Tensor x = batch.reshaped(batch_shape(N, in_shape));
  for (std::size_t i = 0; i < std::min(stop, arch.layers().size()); ++i) {
    const auto& info = arch.info()[i];
    const auto& spec = arch.layers()[i];
    if (cache) cache->inputs.push_back(x);
    Tensor y;
    if (const auto* d = std::get_if<layers::Dense>(&spec)) {
      y = Tensor({N, d->out});
      const auto b = d->bias ? theta.group(groups[info.bias_group]) : std::span<const double>{};
      kernels::dense_forward(x.values(), theta.group(groups[info.weight_group]), b, y.values(),
                             {N, d->in, d->out});
    } else if (const auto* c = std::get_if<layers::Conv2d>(&spec)) {
      y = Tensor(batch_shape(N, info.out_shape));
      kernels::conv2d_forward(x.values(), theta.group(groups[info.weight_group]),
                              theta.group(groups[info.bias_group]), y.values(),
                              conv_dims(*c, info.in_shape, N));
    } else if (const auto* bn = std::get_if<layers::BatchNorm>(&spec)) {
      BnState* upd = bn_update ? &(*bn_update)[info.bn_index] : nullptr;
      y = bn_forward(model, info, *bn, x, mode, upd, cache ? &cache->bn[i] : nullptr);
    } else if (std::holds_alternative<layers::Relu>(spec)) {
      y = x;
      for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    } else if (std::holds_alternative<layers::Flatten>(spec)) {
      y = x.reshaped({N, x.row_size()});
    } else {
      y = x;  // the head is applied by the loss
    }
    x = std::move(y);
  }
  if (cache) cache->inputs.push_back(x);
  return x;
}

}  // namespace

Tensor forward(Model& model, const Tensor& batch, Mode mode, ForwardCache* cache) {
  std::vector<BnState> updated;
  std::vector<BnState>* upd = nullptr;
  if (mode == Mode::Train) {
    updated = model.bn_state();
    upd = &updated;
  }
  Tensor logits = run_forward(model, batch, mode, cache, upd, model.arch().layers().size());
  if (!logits.all_finite()) throw NumericError("forward produced non-finite activations");
  if (upd) model.bn_state() = std::move(updated);
  return logits;
}

Tensor forward(const Model& model, const Tensor& batch, ForwardCache* cache) {
  Tensor logits = run_forward(model, batch, Mode::Eval, cache, nullptr, model.arch().layers().size());
  if (!logits.all_finite()) throw NumericError("forward produced non-finite activations");
  return logits;
}

Tensor forward_until(const Model& model, const Tensor& batch, std::size_t stop) {
  return run_forward(model, batch, Mode::Eval, nullptr, nullptr, stop);
}

SoftmaxLoss softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw ShapeError("logits " + shape_string(logits.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  const std::size_t N = logits.dim(0), C = logits.dim(1);
  SoftmaxLoss out{0.0, Tensor({N, C})};
  for (std::size_t n = 0; n < N; ++n) {
    const int y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= C) throw ShapeError("label out of range");
    double mx = logits.at(n, 0);
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits.at(n, c));
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(logits.at(n, c) - mx);
    const double logz = mx + std::log(z);
    out.loss += logz - logits.at(n, static_cast<std::size_t>(y));
    for (std::size_t c = 0; c < C; ++c) {
      const double p = std::exp(logits.at(n, c) - logz);
      out.grad_logits.at(n, c) = (p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) /
                                 static_cast<double>(N);
    }
  }
  out.loss /= static_cast<double>(N);
  return out;
}

ParamVector backward(const Model& model, const ForwardCache& cache, std::span<const int> labels) {
  if (cache.model != &model || cache.version != model.version())
    throw StaleCacheError("forward cache does not belong to the current model parameters");
  if (cache.mode != Mode::Train) throw StaleCacheError("backward requires a Train-mode cache");
  const auto& arch = model.arch();
  if (cache.inputs.size() != arch.layers().size() + 1)
    throw StaleCacheError("incomplete forward cache");
  const auto& groups = arch.param_layout()->groups();
  const auto& theta = model.params();
  ParamVector grad(arch.param_layout(), 0.0);

  Tensor dy = softmax_cross_entropy(cache.inputs.back(), labels).grad_logits;
  const std::size_t N = dy.dim(0);
  for (std::size_t i = arch.layers().size(); i-- > 0;) {
    const auto& info = arch.info()[i];
    const auto& spec = arch.layers()[i];
    const Tensor& x = cache.inputs[i];
    Tensor dx;
    if (const auto* d = std::get_if<layers::Dense>(&spec)) {
      const auto b = d->bias ? grad.group(groups[info.bias_group]) : std::span<double>{};
      kernels::dense_backward_weight(x.values(), dy.values(), grad.group(groups[info.weight_group]),
                                     b, {N, d->in, d->out});
      if (i > 0) {
        dx = Tensor(x.shape());
        kernels::dense_backward_input(dy.values(), theta.group(groups[info.weight_group]),
                                      dx.values(), {N, d->in, d->out});
      }
    } else if (const auto* c = std::get_if<layers::Conv2d>(&spec)) {
      const auto dims = conv_dims(*c, info.in_shape, N);
      kernels::conv2d_backward_weight(x.values(), dy.values(), grad.group(groups[info.weight_group]),
                                      grad.group(groups[info.bias_group]), dims);
      if (i > 0) {
        dx = Tensor(x.shape());
        kernels::conv2d_backward_input(dy.values(), theta.group(groups[info.weight_group]),
                                       dx.values(), dims);
      }
    } else if (const auto* bn = std::get_if<layers::BatchNorm>(&spec)) {
      const auto& bc = cache.bn[i];
      const auto w = theta.group(groups[info.weight_group]);
      auto gw = grad.group(groups[info.weight_group]);
      auto gb = grad.group(groups[info.bias_group]);
      const ChannelView v = channel_view(x, bn->channels);
      const double m = static_cast<double>(v.batch * v.spatial);
      dx = Tensor(x.shape());
      for (std::size_t ch = 0; ch < bn->channels; ++ch) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < v.batch; ++n)
          for (std::size_t p = 0; p < v.spatial; ++p) {
            const std::size_t k = v.index(n, ch, p);
            sum_dy += dy[k];
            sum_dy_xhat += dy[k] * bc.xhat[k];
          }
        gw[ch] = sum_dy_xhat;
        gb[ch] = sum_dy;
        // d xhat = dy * w; the batch-statistics terms collapse to the sums above.
        const double scale = w[ch] * bc.inv_std[ch] / m;
        for (std::size_t n = 0; n < v.batch; ++n)
          for (std::size_t p = 0; p < v.spatial; ++p) {
            const std::size_t k = v.index(n, ch, p);
            dx[k] = scale * (m * dy[k] - sum_dy - bc.xhat[k] * sum_dy_xhat);
          }
      }
    } else if (std::holds_alternative<layers::Relu>(spec)) {
      dx = dy;
      for (std::size_t k = 0; k < dx.size(); ++k)
        if (!(x[k] > 0.0)) dx[k] = 0.0;
    } else if (std::holds_alternative<layers::Flatten>(spec)) {
      dx = dy.reshaped(x.shape());
    } else {
      dx = dy;
    }
    dy = std::move(dx);
  }
  return grad;
}

}  // namespace asym
