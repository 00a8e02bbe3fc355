#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "asym/model.hpp"
#include "asym/param_space.hpp"

namespace asym {

enum class CommonKind { Gauss01, Uniform11, Ternary, Gauss11, Uniform01, Binary, Ones };
enum class SpecialKind { Init, Theta, Sign, SignCentered, Sgp, SgpCentered };
enum class NoiseTransform { None, SignReplace, SignRatio };

using NoiseKind = std::variant<CommonKind, SpecialKind>;

/// Declarative perturbation direction. Given (theta_0, theta_f, seed) it
/// determines the realized vector exactly.
struct NoiseSpec {
  NoiseKind kind = CommonKind::Gauss01;
  NoiseTransform transform = NoiseTransform::None;
  double ratio = 0.0;  // SignRatio only
  std::uint64_t seed = 0;

  void validate() const;
};

// Names used in configs and sidecars: g01, u-11, ternary, g11, u01, binary,
// ones, init, theta, sign, sign-centered, sgp, sgp-centered.
std::string to_string(const NoiseKind& kind);
NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseTransform t);
NoiseTransform parse_noise_transform(const std::string& name);
std::string describe(const NoiseSpec& spec);

bool is_stochastic(CommonKind kind);

struct NoiseVector {
  ParamVector values;
  NoiseSpec spec;
};

// i.i.d. draws per kind; Ones is deterministic.
NoiseVector sample_common(CommonKind kind, std::shared_ptr<const ParamLayout> layout,
                          std::uint64_t seed);

// theta_0 is required only for SpecialKind::Init (throws ConfigError if null).
NoiseVector make_special(SpecialKind kind, const ParamVector* theta0, const ParamVector& theta_f);

// |eps| * sign(theta_f)
NoiseVector sign_replace(const NoiseVector& eps, const ParamVector& theta_f);

// Forces sign(theta_f) on a uniformly random round(r * n)-subset of positions.
NoiseVector sign_ratio_construct(const NoiseVector& eps, const ParamVector& theta_f, double r,
                                 std::uint64_t seed);

// Realizes a full spec against a model (uses its params as theta_f and its
// init snapshot as theta_0).
NoiseVector realize(const NoiseSpec& spec, const Model& model);

}  // namespace asym
