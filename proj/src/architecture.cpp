#include "asym/architecture.hpp"

#include <charconv>
#include <sstream>

#include "asym/errors.hpp"
#include "asym/tensor.hpp"

namespace asym {

std::string to_string(BnInit init) {
  switch (init) {
    case BnInit::Ones: return "ones";
    case BnInit::Uniform01: return "uniform01";
    case BnInit::Gauss01: return "gauss01";
  }
  return "ones";
}

BnInit parse_bn_init(std::string_view text) {
  if (text == "ones") return BnInit::Ones;
  if (text == "uniform01") return BnInit::Uniform01;
  if (text == "gauss01") return BnInit::Gauss01;
  throw ConfigError("unknown BN init '" + std::string(text) + "' (ones|uniform01|gauss01)");
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

std::string_view preset(std::string_view text) {
  if (text == "mlp-bn")
    return "input=64;dense=128;bn=ones;relu;dense=128;bn=ones;relu;dense=10;softmax";
  if (text == "mlp") return "input=64;dense=128;relu;dense=128;relu;dense=10;softmax";
  if (text == "cnn-bn")
    return "input=3x32x32;conv=16:3:2:1;bn=ones;relu;conv=32:3:2:1;bn=ones;relu;flatten;"
           "dense=10;softmax";
  return text;
}

}  // namespace

Architecture::Architecture(std::vector<std::size_t> input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  if (input_shape_.empty() || shape_product(input_shape_) == 0)
    throw ShapeError("architecture input shape must be non-empty");
  if (layers_.empty() || !std::holds_alternative<layers::SoftmaxCE>(layers_.back()))
    throw ShapeError("architecture must end with a SoftmaxCE head");

  std::vector<ParamGroup> groups;
  std::size_t offset = 0;
  auto add_group = [&](std::string name, std::size_t size, GroupKind kind, std::size_t filter) {
    groups.push_back({std::move(name), offset, size, kind, filter});
    offset += size;
    return groups.size() - 1;
  };

  std::size_t last_dense = kNoGroup;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (std::holds_alternative<layers::Dense>(layers_[i])) last_dense = i;

  std::size_t n_dense = 0, n_conv = 0, n_bn = 0, n_relu = 0, n_flat = 0, n_soft = 0;
  std::vector<std::size_t> shape = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    LayerInfo info;
    info.in_shape = shape;
    const auto& spec = layers_[i];
    if (const auto* d = std::get_if<layers::Dense>(&spec)) {
      if (shape.size() != 1 || shape[0] != d->in)
        throw ShapeError("dense layer " + std::to_string(i) + " expects input (" +
                         std::to_string(d->in) + "), got " + shape_string(shape));
      if (d->out == 0) throw ShapeError("dense layer with zero outputs");
      info.name = "dense" + std::to_string(n_dense++);
      const bool clf = i == last_dense;
      info.weight_group = add_group(info.name + ".weight", d->in * d->out,
                                    clf ? GroupKind::CLFWeight : GroupKind::OtherWeight, d->in);
      if (d->bias)
        info.bias_group = add_group(info.name + ".bias", d->out,
                                    clf ? GroupKind::CLFBias : GroupKind::OtherBias, 0);
      shape = {d->out};
    } else if (const auto* c = std::get_if<layers::Conv2d>(&spec)) {
      if (shape.size() != 3 || shape[0] != c->in_ch)
        throw ShapeError("conv layer " + std::to_string(i) + " expects (" +
                         std::to_string(c->in_ch) + ", H, W), got " + shape_string(shape));
      if (c->kernel == 0 || c->stride == 0 || c->out_ch == 0)
        throw ShapeError("conv layer with zero kernel, stride or channels");
      if (shape[1] + 2 * c->pad < c->kernel || shape[2] + 2 * c->pad < c->kernel)
        throw ShapeError("conv kernel larger than padded input");
      info.name = "conv" + std::to_string(n_conv++);
      const std::size_t fsize = c->in_ch * c->kernel * c->kernel;
      info.weight_group =
          add_group(info.name + ".weight", c->out_ch * fsize, GroupKind::OtherWeight, fsize);
      info.bias_group = add_group(info.name + ".bias", c->out_ch, GroupKind::OtherBias, 0);
      shape = {c->out_ch, (shape[1] + 2 * c->pad - c->kernel) / c->stride + 1,
               (shape[2] + 2 * c->pad - c->kernel) / c->stride + 1};
    } else if (const auto* b = std::get_if<layers::BatchNorm>(&spec)) {
      if ((shape.size() != 1 && shape.size() != 3) || shape[0] != b->channels)
        throw ShapeError("batchnorm layer " + std::to_string(i) + " expects " +
                         std::to_string(b->channels) + " channels, got " + shape_string(shape));
      info.name = "bn" + std::to_string(n_bn);
      info.bn_index = n_bn++;
      info.weight_group = add_group(info.name + ".weight", b->channels, GroupKind::BNWeight, 0);
      info.bias_group = add_group(info.name + ".bias", b->channels, GroupKind::BNBias, 0);
    } else if (std::holds_alternative<layers::Relu>(spec)) {
      info.name = "relu" + std::to_string(n_relu++);
    } else if (std::holds_alternative<layers::Flatten>(spec)) {
      info.name = "flatten" + std::to_string(n_flat++);
      shape = {shape_product(shape)};
    } else {
      if (i + 1 != layers_.size()) throw ShapeError("SoftmaxCE head must be the last layer");
      if (shape.size() != 1) throw ShapeError("SoftmaxCE head expects a flat input");
      info.name = "softmax" + std::to_string(n_soft++);
      num_classes_ = shape[0];
    }
    info.out_shape = shape;
    info_.push_back(std::move(info));
  }
  if (num_classes_ < 2) throw ShapeError("classifier needs at least two classes");
  bn_count_ = n_bn;
  layout_ = std::make_shared<const ParamLayout>(std::move(groups));
}

Architecture Architecture::parse(std::string_view text) {
  text = trim(preset(trim(text)));
  const auto tokens = split(text, ';');
  if (tokens.empty() || trim(tokens[0]).substr(0, 6) != "input=")
    throw ConfigError("architecture must start with input=DIMS");
  std::vector<std::size_t> input;
  for (auto d : split(trim(tokens[0]).substr(6), 'x')) input.push_back(parse_size(trim(d)));

  std::vector<LayerSpec> specs;
  std::vector<std::size_t> shape = input;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto tok = trim(tokens[t]);
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    const auto key = tok.substr(0, eq);
    const auto arg = eq == std::string_view::npos ? std::string_view{} : tok.substr(eq + 1);
    if (key == "dense") {
      const auto parts = split(arg, ':');
      if (shape.size() != 1) throw ConfigError("dense after non-flat input; add flatten");
      layers::Dense d{shape[0], parse_size(parts[0]), true};
      if (parts.size() > 1) {
        if (parts[1] != "nobias") throw ConfigError("unknown dense option " + std::string(parts[1]));
        d.bias = false;
      }
      specs.emplace_back(d);
      shape = {d.out};
    } else if (key == "conv") {
      const auto parts = split(arg, ':');
      if (parts.size() < 2 || parts.size() > 4) throw ConfigError("conv=OUT:K[:STRIDE[:PAD]]");
      if (shape.size() != 3) throw ConfigError("conv needs a CxHxW input");
      layers::Conv2d c{shape[0], parse_size(parts[0]), parse_size(parts[1]), 1, 0};
      if (parts.size() > 2) c.stride = parse_size(parts[2]);
      if (parts.size() > 3) c.pad = parse_size(parts[3]);
      if (c.stride == 0 || shape[1] + 2 * c.pad < c.kernel || shape[2] + 2 * c.pad < c.kernel)
        throw ConfigError("invalid conv geometry");
      specs.emplace_back(c);
      shape = {c.out_ch, (shape[1] + 2 * c.pad - c.kernel) / c.stride + 1,
               (shape[2] + 2 * c.pad - c.kernel) / c.stride + 1};
    } else if (key == "bn") {
      specs.emplace_back(layers::BatchNorm{shape[0], arg.empty() ? BnInit::Ones : parse_bn_init(arg)});
    } else if (key == "relu") {
      specs.emplace_back(layers::Relu{});
    } else if (key == "flatten") {
      specs.emplace_back(layers::Flatten{});
      shape = {shape_product(shape)};
    } else if (key == "softmax") {
      specs.emplace_back(layers::SoftmaxCE{});
    } else {
      throw ConfigError("unknown layer token '" + std::string(tok) + "'");
    }
  }
  try {
    return Architecture(std::move(input), std::move(specs));
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("invalid architecture: ") + e.what());
  }
}

std::string Architecture::to_string() const {
  std::ostringstream os;
  os << "input=";
  for (std::size_t i = 0; i < input_shape_.size(); ++i) os << (i ? "x" : "") << input_shape_[i];
  for (const auto& spec : layers_) {
    os << ';';
    if (const auto* d = std::get_if<layers::Dense>(&spec)) {
      os << "dense=" << d->out << (d->bias ? "" : ":nobias");
    } else if (const auto* c = std::get_if<layers::Conv2d>(&spec)) {
      os << "conv=" << c->out_ch << ':' << c->kernel << ':' << c->stride << ':' << c->pad;
    } else if (const auto* b = std::get_if<layers::BatchNorm>(&spec)) {
      os << "bn=" << asym::to_string(b->init);
    } else if (std::holds_alternative<layers::Relu>(spec)) {
      os << "relu";
    } else if (std::holds_alternative<layers::Flatten>(spec)) {
      os << "flatten";
    } else {
      os << "softmax";
    }
  }
  return os.str();
}

Architecture Architecture::mlp(const std::vector<std::size_t>& widths, bool batch_norm,
                               BnInit init) {
  if (widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  std::vector<LayerSpec> specs;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    specs.emplace_back(layers::Dense{widths[i - 1], widths[i], true});
    if (i + 1 < widths.size()) {
      if (batch_norm) specs.emplace_back(layers::BatchNorm{widths[i], init});
      specs.emplace_back(layers::Relu{});
    }
  }
  specs.emplace_back(layers::SoftmaxCE{});
  return Architecture({widths.front()}, std::move(specs));
}

Architecture Architecture::with_bn_init(BnInit init) const {
  auto specs = layers_;
  for (auto& s : specs)
    if (auto* b = std::get_if<layers::BatchNorm>(&s)) b->init = init;
  return Architecture(input_shape_, std::move(specs));
}

std::size_t Architecture::layer_index(std::string_view name) const {
  for (std::size_t i = 0; i < info_.size(); ++i)
    if (info_[i].name == name) return i;
  throw ConfigError("unknown layer tag '" + std::string(name) + "'");
}

}  // namespace asym
