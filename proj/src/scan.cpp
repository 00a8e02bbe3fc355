#include "asym/scan.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "asym/checkpoint.hpp"
#include "asym/errors.hpp"

namespace asym {

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::NS: return "ns";
    case Normalization::FilterNS: return "filter-ns";
    case Normalization::Raw: return "raw";
  }
  return "ns";
}

Normalization parse_normalization(const std::string& name) {
  if (name == "ns") return Normalization::NS;
  if (name == "filter-ns") return Normalization::FilterNS;
  if (name == "raw") return Normalization::Raw;
  throw ConfigError("unknown normalization '" + name + "' (ns|filter-ns|raw)");
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  if (points < 2) throw ConfigError("grid needs at least two points");
  std::vector<double> g(points);
  const double n = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    // Symmetric construction so that mirrored points are exact negatives.
    const double t = static_cast<double>(i) / n;
    g[i] = lo * (1.0 - t) + hi * t;
  }
  if (lo == -hi) {
    for (std::size_t i = 0; i < points / 2; ++i) g[points - 1 - i] = -g[i];
    if (points % 2 == 1) g[points / 2] = 0.0;
  }
  return g;
}

void ScanConfig::validate() const {
  if (lambdas.empty()) throw ConfigError("empty lambda grid");
  bool has_zero = false;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!std::isfinite(lambdas[i]) || lambdas[i] < -1.0 || lambdas[i] > 1.0)
      throw ConfigError("lambda grid must lie in [-1, 1]");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw ConfigError("lambda grid must be increasing");
    if (lambdas[i] != -lambdas[lambdas.size() - 1 - i])
      throw ConfigError("lambda grid must be symmetric about 0");
    has_zero |= lambdas[i] == 0.0;
  }
  if (!has_zero) throw ConfigError("lambda grid must contain 0");
  if (!std::isfinite(s) || s < 0.0) throw ConfigError("scale s must be finite and >= 0");
}

ParamVector scan_direction(const ParamVector& eps, const ParamVector& theta, Normalization n,
                           double s) {
  switch (n) {
    case Normalization::NS: return params::scale(params::ns_scale(eps, theta), s);
    case Normalization::FilterNS: return params::scale(params::filter_ns(eps, theta), s);
    case Normalization::Raw: return params::scale(eps, s);
  }
  return eps;
}

ScanPoint evaluate_point(const Model& base, ParamVector params, bool recompute,
                         const Dataset& eval, const Dataset& calibration) {
  ScanPoint pt;
  try {
    if (!params.all_finite()) throw NumericError("non-finite parameters");
    Model m = base.with_params(std::move(params));
    if (recompute) m = bn_recompute(std::move(m), calibration);
    const auto ev = evaluate(m, eval);
    pt.error = ev.error;
    pt.ce = ev.ce;
  } catch (const NumericError&) {
    pt.error = 1.0;
    pt.ce = std::numeric_limits<double>::infinity();
    pt.non_finite = true;
  }
  return pt;
}

namespace {

// Evaluates params_at(i) for every grid index in parallel; ordered by index.
template <typename ParamsAt>
std::vector<ScanPoint> run_grid(const Model& base, const std::vector<double>& lambdas,
                                ParamsAt params_at, bool recompute, const Dataset& eval,
                                const Dataset& calibration) {
  std::vector<ScanPoint> points(lambdas.size());
  std::vector<std::exception_ptr> errors(lambdas.size());
  const auto n = static_cast<std::int64_t>(lambdas.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      points[i] = evaluate_point(base, params_at(static_cast<std::size_t>(i)), recompute, eval,
                                 calibration);
      points[i].lambda = lambdas[i];
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return points;
}

}  // namespace

ScanResult scan_1d(const Model& model, const NoiseVector& noise, const ScanConfig& cfg,
                   const Dataset& eval, const Dataset& calibration) {
  if (eval.empty() || calibration.empty()) throw ConfigError("scan_1d: empty dataset");
  require_same_layout(noise.values, model.params(), "scan_1d");
  for (std::size_t i = 1; i < cfg.lambdas.size(); ++i)
    if (!(cfg.lambdas[i] > cfg.lambdas[i - 1])) throw ConfigError("lambda grid must be increasing");
  const ParamVector dir = scan_direction(noise.values, model.params(), cfg.normalization, cfg.s);
  const ParamVector& theta = model.params();
  ScanResult result;
  result.points = run_grid(
      model, cfg.lambdas,
      [&](std::size_t i) { return params::axpy(theta, cfg.lambdas[i], dir); }, cfg.bn_recompute,
      eval, calibration);
  result.noise = noise.spec;
  result.config = cfg;
  result.checkpoint_id = checkpoint_id(model);
  return result;
}

ScanResult scan_1d(const Model& model, const NoiseVector& noise, const ScanConfig& cfg,
                   const Dataset& data) {
  return scan_1d(model, noise, cfg, data, data);
}

Asymmetry asymmetry_stats(const ScanResult& result, Metric metric) {
  const auto& pts = result.points;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].lambda != -pts[pts.size() - 1 - i].lambda)
      throw ConfigError("asymmetry_stats requires a grid symmetric about 0");
  Asymmetry a;
  std::size_t npos = 0, nneg = 0;
  for (const auto& p : pts) {
    const double v = metric == Metric::Error ? p.error : p.ce;
    if (p.lambda > 0.0) {
      a.pos_mean += v;
      ++npos;
    } else if (p.lambda < 0.0) {
      a.neg_mean += v;
      ++nneg;
    }
  }
  if (npos) a.pos_mean /= static_cast<double>(npos);
  if (nneg) a.neg_mean /= static_cast<double>(nneg);
  a.gap = a.neg_mean - a.pos_mean;
  return a;
}

InterpolationResult interpolate_two(const Model& first, const Model& second,
                                    const std::vector<double>& lambdas, const Dataset& eval,
                                    const Dataset& calibration) {
  if (!(first.arch() == second.arch())) throw ShapeError("interpolate_two: architectures differ");
  require_same_layout(first.params(), second.params(), "interpolate_two");
  if (eval.empty() || calibration.empty()) throw ConfigError("interpolate_two: empty dataset");
  const ParamVector& a = first.params();
  const ParamVector& b = second.params();
  InterpolationResult out;
  out.curve.points = run_grid(
      first, lambdas, [&](std::size_t i) { return params::lerp(a, b, lambdas[i]); }, true, eval,
      calibration);
  out.curve.config.lambdas = lambdas;
  out.curve.config.normalization = Normalization::Raw;
  out.curve.checkpoint_id = checkpoint_id(first) + "+" + checkpoint_id(second);
  const ParamVector eps = params::subtract(b, a);
  out.ssr_first = params::sign_consistency_ratio(a, eps);
  out.ssr_second = params::sign_consistency_ratio(b, eps);
  return out;
}

std::vector<double> bn_weights(const ParamVector& params) {
  std::vector<double> out;
  for (const auto& g : params.layout().groups())
    if (g.kind == GroupKind::BNWeight) {
      const auto s = params.group(g);
      out.insert(out.end(), s.begin(), s.end());
    }
  return out;
}

}  // namespace asym
