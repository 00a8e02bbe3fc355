#include "asym/model.hpp"

#include <cmath>
#include <random>

#include "asym/errors.hpp"
#include "asym/rng.hpp"

namespace asym {

Model Model::initialize(Architecture arch, std::uint64_t seed, double bn_epsilon) {
  ParamVector params(arch.param_layout(), 0.0);
  Rng rng = make_rng(seed, "init");
  const auto& groups = arch.param_layout()->groups();
  for (std::size_t i = 0; i < arch.layers().size(); ++i) {
    const auto& info = arch.info()[i];
    const auto& spec = arch.layers()[i];
    if (std::holds_alternative<layers::Dense>(spec) ||
        std::holds_alternative<layers::Conv2d>(spec)) {
      const auto& g = groups[info.weight_group];
      const double bound = std::sqrt(6.0 / static_cast<double>(g.filter_size));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& w : params.group(g)) w = dist(rng);
    } else if (const auto* bn = std::get_if<layers::BatchNorm>(&spec)) {
      auto w = params.group(groups[info.weight_group]);
      switch (bn->init) {
        case BnInit::Ones:
          std::fill(w.begin(), w.end(), 1.0);
          break;
        case BnInit::Uniform01: {
          std::uniform_real_distribution<double> dist(0.0, 1.0);
          for (double& x : w) x = dist(rng);
          break;
        }
        case BnInit::Gauss01: {
          std::normal_distribution<double> dist(0.0, 0.1);
          for (double& x : w) x = dist(rng);
          break;
        }
      }
    }
  }
  std::vector<BnState> bn;
  for (const auto& spec : arch.layers())
    if (const auto* b = std::get_if<layers::BatchNorm>(&spec))
      bn.push_back({std::vector<double>(b->channels, 0.0), std::vector<double>(b->channels, 1.0)});
  ParamVector init = params;
  return Model(std::move(arch), std::move(params), std::move(bn), std::move(init), seed, bn_epsilon);
}

Model::Model(Architecture arch, ParamVector params, std::vector<BnState> bn_state,
             ParamVector init_snapshot, std::uint64_t seed, double bn_epsilon)
    : arch_(std::move(arch)),
      params_(std::move(params)),
      bn_state_(std::move(bn_state)),
      init_snapshot_(std::make_shared<const ParamVector>(std::move(init_snapshot))),
      seed_(seed),
      bn_epsilon_(bn_epsilon) {
  if (params_.layout() != *arch_.param_layout())
    throw ShapeError("parameters do not match the architecture layout");
  if (init_snapshot_->layout() != *arch_.param_layout())
    throw ShapeError("init snapshot does not match the architecture layout");
  if (bn_state_.size() != arch_.bn_count()) throw ShapeError("BN state count mismatch");
  if (!(bn_epsilon_ > 0.0)) throw ConfigError("bn_epsilon must be positive");
  std::size_t k = 0;
  for (const auto& spec : arch_.layers()) {
    if (const auto* b = std::get_if<layers::BatchNorm>(&spec)) {
      const auto& s = bn_state_[k++];
      if (s.running_mean.size() != b->channels || s.running_var.size() != b->channels)
        throw ShapeError("BN state channel mismatch");
      for (double v : s.running_var)
        if (!(v >= 0.0)) throw NumericError("BN running variance must be non-negative");
    }
  }
}

void Model::set_params(ParamVector params) {
  if (params.layout() != *arch_.param_layout())
    throw ShapeError("parameters do not match the architecture layout");
  params_ = std::move(params);
  ++version_;
}

Model Model::with_params(ParamVector params) const {
  Model copy = *this;
  copy.set_params(std::move(params));
  return copy;
}

void Model::reset_bn_state() {
  for (auto& s : bn_state_) {
    std::fill(s.running_mean.begin(), s.running_mean.end(), 0.0);
    std::fill(s.running_var.begin(), s.running_var.end(), 1.0);
  }
}

}  // namespace asym
