#include "asym/noise.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "asym/errors.hpp"
#include "asym/rng.hpp"

namespace asym {

namespace {

struct KindName {
  NoiseKind kind;
  const char* name;
};

const KindName kKindNames[] = {
    {CommonKind::Gauss01, "g01"},         {CommonKind::Uniform11, "u-11"},
    {CommonKind::Ternary, "ternary"},     {CommonKind::Gauss11, "g11"},
    {CommonKind::Uniform01, "u01"},       {CommonKind::Binary, "binary"},
    {CommonKind::Ones, "ones"},           {SpecialKind::Init, "init"},
    {SpecialKind::Theta, "theta"},        {SpecialKind::Sign, "sign"},
    {SpecialKind::SignCentered, "sign-centered"}, {SpecialKind::Sgp, "sgp"},
    {SpecialKind::SgpCentered, "sgp-centered"},
};

inline double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace

std::string to_string(const NoiseKind& kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& name) {
  for (const auto& k : kKindNames)
    if (name == k.name) return k.kind;
  throw ConfigError("unknown noise kind '" + name + "'");
}

std::string to_string(NoiseTransform t) {
  switch (t) {
    case NoiseTransform::None: return "none";
    case NoiseTransform::SignReplace: return "sign-replace";
    case NoiseTransform::SignRatio: return "sign-ratio";
  }
  return "none";
}

NoiseTransform parse_noise_transform(const std::string& name) {
  if (name == "none" || name.empty()) return NoiseTransform::None;
  if (name == "sign-replace") return NoiseTransform::SignReplace;
  if (name == "sign-ratio") return NoiseTransform::SignRatio;
  throw ConfigError("unknown noise transform '" + name + "'");
}

std::string describe(const NoiseSpec& spec) {
  std::ostringstream os;
  os << to_string(spec.kind) << '/' << to_string(spec.transform);
  if (spec.transform == NoiseTransform::SignRatio) os << '(' << spec.ratio << ')';
  os << "/seed=" << spec.seed;
  return os.str();
}

bool is_stochastic(CommonKind kind) { return kind != CommonKind::Ones; }

void NoiseSpec::validate() const {
  if (transform == NoiseTransform::SignRatio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("sign ratio r must be in [0, 1]");
    const auto* common = std::get_if<CommonKind>(&kind);
    if (!common || !is_stochastic(*common))
      throw ConfigError("sign-ratio transform requires a stochastic noise kind");
  }
}

NoiseVector sample_common(CommonKind kind, std::shared_ptr<const ParamLayout> layout,
                          std::uint64_t seed) {
  ParamVector v(std::move(layout), 0.0);
  Rng rng = make_rng(seed, "noise-common", static_cast<std::uint64_t>(kind));
  auto fill = [&](auto&& draw) {
    for (double& x : v.values()) x = draw();
  };
  switch (kind) {
    case CommonKind::Gauss01: {
      std::normal_distribution<double> d(0.0, 1.0);
      fill([&] { return d(rng); });
      break;
    }
    case CommonKind::Uniform11: {
      std::uniform_real_distribution<double> d(-1.0, 1.0);
      fill([&] { return d(rng); });
      break;
    }
    case CommonKind::Ternary: {
      std::uniform_int_distribution<int> d(-1, 1);
      fill([&] { return static_cast<double>(d(rng)); });
      break;
    }
    case CommonKind::Gauss11: {
      std::normal_distribution<double> d(1.0, 1.0);
      fill([&] { return d(rng); });
      break;
    }
    case CommonKind::Uniform01: {
      std::uniform_real_distribution<double> d(0.0, 1.0);
      fill([&] { return d(rng); });
      break;
    }
    case CommonKind::Binary: {
      std::uniform_int_distribution<int> d(0, 1);
      fill([&] { return static_cast<double>(d(rng)); });
      break;
    }
    case CommonKind::Ones:
      fill([] { return 1.0; });
      break;
  }
  NoiseSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  return {std::move(v), spec};
}

NoiseVector make_special(SpecialKind kind, const ParamVector* theta0, const ParamVector& theta_f) {
  NoiseSpec spec;
  spec.kind = kind;
  auto centered = [&]() {
    ParamVector c = theta_f;
    const auto mu = params::group_means(theta_f);
    const auto& groups = theta_f.layout().groups();
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (double& x : c.group(groups[g])) x -= mu[g];
    return c;
  };
  switch (kind) {
    case SpecialKind::Init:
      if (!theta0) throw ConfigError("init-direction noise needs the initialization snapshot");
      require_same_layout(*theta0, theta_f, "make_special");
      return {*theta0, spec};
    case SpecialKind::Theta: return {theta_f, spec};
    case SpecialKind::Sign: return {params::sign(theta_f), spec};
    case SpecialKind::SignCentered: return {params::sign(centered()), spec};
    case SpecialKind::Sgp: return {params::sgp(theta_f), spec};
    case SpecialKind::SgpCentered: return {params::sgp(centered()), spec};
  }
  throw ConfigError("unknown special noise kind");
}

NoiseVector sign_replace(const NoiseVector& eps, const ParamVector& theta_f) {
  require_same_layout(eps.values, theta_f, "sign_replace");
  NoiseVector out = eps;
  for (std::size_t i = 0; i < theta_f.size(); ++i)
    out.values[i] = std::fabs(eps.values[i]) * sign_of(theta_f[i]);
  out.spec.transform = NoiseTransform::SignReplace;
  return out;
}

NoiseVector sign_ratio_construct(const NoiseVector& eps, const ParamVector& theta_f, double r,
                                 std::uint64_t seed) {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("sign ratio r must be in [0, 1]");
  require_same_layout(eps.values, theta_f, "sign_ratio_construct");
  NoiseVector out = eps;
  const std::size_t n = theta_f.size();
  const auto k = static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
  Rng rng = make_rng(seed, "sign-ratio");
  for (std::size_t i : sample_without_replacement(n, k, rng))
    out.values[i] = std::fabs(eps.values[i]) * sign_of(theta_f[i]);
  out.spec.transform = NoiseTransform::SignRatio;
  out.spec.ratio = r;
  return out;
}

NoiseVector realize(const NoiseSpec& spec, const Model& model) {
  spec.validate();
  const ParamVector& theta = model.params();
  NoiseVector base = std::visit(
      [&](auto kind) -> NoiseVector {
        if constexpr (std::is_same_v<decltype(kind), CommonKind>)
          return sample_common(kind, theta.layout_ptr(), spec.seed);
        else
          return make_special(kind, &model.init_snapshot(), theta);
      },
      spec.kind);
  base.spec.seed = spec.seed;
  switch (spec.transform) {
    case NoiseTransform::None: return base;
    case NoiseTransform::SignReplace: return sign_replace(base, theta);
    case NoiseTransform::SignRatio: return sign_ratio_construct(base, theta, spec.ratio, spec.seed);
  }
  return base;
}

}  // namespace asym
