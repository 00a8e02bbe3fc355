#include "asym/param_space.hpp"

#include <cmath>
#include <stdexcept>

#include "asym/errors.hpp"
#include "asym/rng.hpp"

namespace asym {

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::BNWeight: return "bn_weight";
    case GroupKind::BNBias: return "bn_bias";
    case GroupKind::CLFWeight: return "clf_weight";
    case GroupKind::CLFBias: return "clf_bias";
    case GroupKind::OtherWeight: return "other_weight";
    case GroupKind::OtherBias: return "other_bias";
  }
  return "unknown";
}

std::string report_label(GroupKind kind) {
  switch (kind) {
    case GroupKind::BNWeight: return "BN Weight";
    case GroupKind::CLFWeight: return "CLF Weight";
    case GroupKind::CLFBias: return "CLF Bias";
    case GroupKind::OtherWeight: return "Other Weight";
    case GroupKind::BNBias:
    case GroupKind::OtherBias: return "Other Bias";
  }
  return "Other Weight";
}

const std::vector<std::string>& report_labels() {
  static const std::vector<std::string> labels = {"BN Weight", "CLF Weight", "CLF Bias",
                                                  "Other Weight", "Other Bias"};
  return labels;
}

bool operator==(const ParamGroup& a, const ParamGroup& b) {
  return a.name == b.name && a.offset == b.offset && a.size == b.size && a.kind == b.kind &&
         a.filter_size == b.filter_size;
}

ParamLayout::ParamLayout(std::vector<ParamGroup> groups) : groups_(std::move(groups)) {
  std::size_t offset = 0;
  for (const auto& g : groups_) {
    if (g.offset != offset) throw ShapeError("parameter groups must be contiguous: " + g.name);
    if (g.has_filters() && g.size % g.filter_size != 0)
      throw ShapeError("filters do not partition group " + g.name);
    offset += g.size;
  }
  size_ = offset;
}

const ParamGroup* ParamLayout::find(const std::string& name) const {
  for (const auto& g : groups_)
    if (g.name == name) return &g;
  return nullptr;
}

bool operator==(const ParamLayout& a, const ParamLayout& b) {
  return a.size_ == b.size_ && a.groups_ == b.groups_;
}

ParamVector::ParamVector(std::shared_ptr<const ParamLayout> layout, double fill)
    : layout_(std::move(layout)), values_(layout_->size(), fill) {}

ParamVector::ParamVector(std::shared_ptr<const ParamLayout> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_->size())
    throw ShapeError("parameter vector length " + std::to_string(values_.size()) +
                     " does not match layout length " + std::to_string(layout_->size()));
}

ParamVector ParamVector::flat(std::vector<double> values, std::size_t filter_size) {
  ParamGroup g{"w", 0, values.size(), GroupKind::OtherWeight, filter_size};
  auto layout = std::make_shared<const ParamLayout>(std::vector<ParamGroup>{g});
  return ParamVector(std::move(layout), std::move(values));
}

ParamVector ParamVector::with_values(std::vector<double> values) const {
  return ParamVector(layout_, std::move(values));
}

bool ParamVector::same_layout(const ParamVector& other) const {
  if (layout_ == other.layout_) return true;
  if (!layout_ || !other.layout_) return false;
  return *layout_ == *other.layout_;
}

bool ParamVector::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::uint64_t ParamVector::hash() const {
  return fnv1a(values_.data(), values_.size() * sizeof(double));
}

void require_same_layout(const ParamVector& a, const ParamVector& b, const char* what) {
  if (!a.same_layout(b)) throw ShapeError(std::string(what) + ": parameter layouts differ");
}

namespace params {

namespace {

template <typename F>
ParamVector map(const ParamVector& v, F f) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return v.with_values(std::move(out));
}

template <typename F>
ParamVector zip(const ParamVector& a, const ParamVector& b, const char* what, F f) {
  require_same_layout(a, b, what);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return a.with_values(std::move(out));
}

double span_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

}  // namespace

ParamVector sign(const ParamVector& v) { return map(v, sign_of); }
ParamVector sgp(const ParamVector& v) {
  return map(v, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}
ParamVector abs(const ParamVector& v) {
  return map(v, [](double x) { return std::fabs(x); });
}
ParamVector negate(const ParamVector& v) {
  return map(v, [](double x) { return -x; });
}
ParamVector scale(const ParamVector& v, double c) {
  return map(v, [c](double x) { return c * x; });
}

ParamVector axpy(const ParamVector& a, double c, const ParamVector& b) {
  return zip(a, b, "axpy", [c](double x, double y) { return x + c * y; });
}

ParamVector lerp(const ParamVector& a, const ParamVector& b, double t) {
  return zip(a, b, "lerp", [t](double x, double y) { return (1.0 - t) * x + t * y; });
}

ParamVector subtract(const ParamVector& a, const ParamVector& b) {
  return zip(a, b, "subtract", [](double x, double y) { return x - y; });
}

ParamVector hadamard(const ParamVector& a, const ParamVector& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const ParamVector& v) { return span_norm(v.values()); }

double cosine(const ParamVector& a, const ParamVector& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

ParamVector ns_scale(const ParamVector& eps, const ParamVector& theta) {
  require_same_layout(eps, theta, "ns_scale");
  const double ne = norm(eps);
  if (ne == 0.0) throw NumericError("ns_scale: noise vector has zero norm");
  const double factor = norm(theta) / ne;
  return scale(eps, factor);
}

ParamVector filter_ns(const ParamVector& eps, const ParamVector& theta) {
  require_same_layout(eps, theta, "filter_ns");
  ParamVector out = eps;
  auto rescale = [&](std::size_t begin, std::size_t len, const std::string& where) {
    const auto e = eps.values().subspan(begin, len);
    const double ne = span_norm(e);
    if (ne == 0.0) throw NumericError("filter_ns: zero-norm noise filter in " + where);
    const double factor = span_norm(theta.values().subspan(begin, len)) / ne;
    for (std::size_t i = 0; i < len; ++i) out[begin + i] = e[i] * factor;
  };
  for (const auto& g : eps.layout().groups()) {
    if (g.has_filters()) {
      for (std::size_t f = 0; f < g.filter_count(); ++f)
        rescale(g.offset + f * g.filter_size, g.filter_size,
                g.name + "[" + std::to_string(f) + "]");
    } else {
      rescale(g.offset, g.size, g.name);
    }
  }
  return out;
}

ParamVector adaptive_diag(const ParamVector& theta) {
  ParamVector out = theta;
  for (const auto& g : theta.layout().groups()) {
    if (g.has_filters()) {
      for (std::size_t f = 0; f < g.filter_count(); ++f) {
        const std::size_t begin = g.offset + f * g.filter_size;
        const double n = span_norm(theta.values().subspan(begin, g.filter_size));
        for (std::size_t i = 0; i < g.filter_size; ++i) out[begin + i] = n;
      }
    } else {
      for (std::size_t i = g.offset; i < g.offset + g.size; ++i) out[i] = std::fabs(theta[i]);
    }
  }
  return out;
}

SignConsistency sign_consistency_ratio(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b, "sign_consistency_ratio");
  SignConsistency out;
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // agree, total
  std::size_t agree_all = 0;
  for (const auto& g : a.layout().groups()) {
    auto& [agree, total] = counts[report_label(g.kind)];
    for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
      const bool same = sign_of(a[i]) == sign_of(b[i]);
      agree += same;
      agree_all += same;
    }
    total += g.size;
  }
  out.overall = a.size() == 0 ? 1.0 : static_cast<double>(agree_all) / static_cast<double>(a.size());
  for (const auto& [label, c] : counts)
    if (c.second > 0) out.per_group[label] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

GroupStats group_stats(const ParamVector& v) {
  std::map<std::string, std::vector<double>> buckets;
  for (const auto& g : v.layout().groups()) {
    auto& b = buckets[report_label(g.kind)];
    const auto s = v.group(g);
    b.insert(b.end(), s.begin(), s.end());
  }
  GroupStats out;
  for (const auto& [label, vals] : buckets) {
    if (vals.empty()) continue;
    double mean = 0.0;
    for (double x : vals) mean += x;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double x : vals) ss += (x - mean) * (x - mean);
    out[label] = {mean, std::sqrt(ss / static_cast<double>(vals.size()))};
  }
  return out;
}

std::vector<double> group_means(const ParamVector& v) {
  std::vector<double> out;
  out.reserve(v.layout().groups().size());
  for (const auto& g : v.layout().groups()) {
    double acc = 0.0;
    for (double x : v.group(g)) acc += x;
    out.push_back(g.size ? acc / static_cast<double>(g.size) : 0.0);
  }
  return out;
}

double positive_fraction(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::size_t pos = 0;
  for (double x : values) pos += x > 0.0;
  return static_cast<double>(pos) / static_cast<double>(values.size());
}

}  // namespace params
}  // namespace asym
