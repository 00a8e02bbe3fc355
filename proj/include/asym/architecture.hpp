#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asym/param_space.hpp"

namespace asym {

enum class BnInit { Ones, Uniform01, Gauss01 };

std::string to_string(BnInit init);
BnInit parse_bn_init(std::string_view text);

namespace layers {
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  bool bias = true;
  friend bool operator==(const Dense&, const Dense&) = default;
};
struct Conv2d {
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 0;
  friend bool operator==(const Conv2d&, const Conv2d&) = default;
};
struct BatchNorm {
  std::size_t channels = 0;
  BnInit init = BnInit::Ones;
  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};
struct Relu {
  friend bool operator==(const Relu&, const Relu&) = default;
};
struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};
struct SoftmaxCE {
  friend bool operator==(const SoftmaxCE&, const SoftmaxCE&) = default;
};
}  // namespace layers

using LayerSpec = std::variant<layers::Dense, layers::Conv2d, layers::BatchNorm, layers::Relu,
                               layers::Flatten, layers::SoftmaxCE>;

inline constexpr std::size_t kNoGroup = std::numeric_limits<std::size_t>::max();

/// Resolved per-layer information computed when an Architecture is validated.
struct LayerInfo {
  std::string name;  // e.g. "dense0", "bn1", "relu0"
  std::vector<std::size_t> in_shape;   // per sample
  std::vector<std::size_t> out_shape;  // per sample
  std::size_t weight_group = kNoGroup;
  std::size_t bias_group = kNoGroup;
  std::size_t bn_index = kNoGroup;  // index into the model's BN state
};

/// Ordered layer list with a per-sample input shape. Adjacent layers must
/// compose and the last layer must be the single SoftmaxCE head.
class Architecture {
 public:
  Architecture() = default;
  Architecture(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers);

  // Text form: "input=64;dense=128;bn=ones;relu;dense=10;softmax".
  // Layer tokens: dense=OUT[:nobias], conv=OUT:K[:STRIDE[:PAD]], bn[=INIT],
  // relu, flatten, softmax. Input sizes are inferred. Presets: "mlp-bn",
  // "mlp", "cnn-bn" (digits / CIFAR sized).
  static Architecture parse(std::string_view text);
  std::string to_string() const;

  // Dense MLP; widths = {in, hidden..., classes}.
  static Architecture mlp(const std::vector<std::size_t>& widths, bool batch_norm,
                          BnInit init = BnInit::Ones);

  Architecture with_bn_init(BnInit init) const;

  const std::vector<std::size_t>& input_shape() const { return input_shape_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::vector<LayerInfo>& info() const { return info_; }
  const std::shared_ptr<const ParamLayout>& param_layout() const { return layout_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t bn_count() const { return bn_count_; }

  // Index of the layer with the given name; throws ConfigError if absent.
  std::size_t layer_index(std::string_view name) const;

  friend bool operator==(const Architecture& a, const Architecture& b) {
    return a.input_shape_ == b.input_shape_ && a.layers_ == b.layers_;
  }

 private:
  std::vector<std::size_t> input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<LayerInfo> info_;
  std::shared_ptr<const ParamLayout> layout_;
  std::size_t num_classes_ = 0;
  std::size_t bn_count_ = 0;
};

}  // namespace asym
