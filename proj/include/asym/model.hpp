#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "asym/architecture.hpp"
#include "asym/param_space.hpp"

namespace asym {

/// Running statistics of one BatchNorm layer.
struct BnState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  friend bool operator==(const BnState&, const BnState&) = default;
};

/// Architecture + learnable parameters + BN running statistics + the
/// parameters the model was initialized with.
class Model {
 public:
  static constexpr double kDefaultBnEpsilon = 1e-5;

  // Kaiming-uniform weights, zero biases, BN weights per the layer's init kind.
  static Model initialize(Architecture arch, std::uint64_t seed,
                          double bn_epsilon = kDefaultBnEpsilon);

  Model(Architecture arch, ParamVector params, std::vector<BnState> bn_state,
        ParamVector init_snapshot, std::uint64_t seed, double bn_epsilon);

  const Architecture& arch() const { return arch_; }
  const ParamVector& params() const { return params_; }
  const std::vector<BnState>& bn_state() const { return bn_state_; }
  std::vector<BnState>& bn_state() { return bn_state_; }
  const ParamVector& init_snapshot() const { return *init_snapshot_; }
  std::uint64_t seed() const { return seed_; }
  double bn_epsilon() const { return bn_epsilon_; }

  // Incremented whenever the learnable parameters change.
  std::uint64_t version() const { return version_; }

  void set_params(ParamVector params);
  // Mutable access; counts as a modification.
  ParamVector& mutable_params() {
    ++version_;
    return params_;
  }

  Model with_params(ParamVector params) const;

  // Resets running statistics to mean 0, variance 1.
  void reset_bn_state();

 private:
  Architecture arch_;
  ParamVector params_;
  std::vector<BnState> bn_state_;
  std::shared_ptr<const ParamVector> init_snapshot_;
  std::uint64_t seed_ = 0;
  double bn_epsilon_ = kDefaultBnEpsilon;
  std::uint64_t version_ = 0;
};

}  // namespace asym
