#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace asym {

enum class GroupKind { BNWeight, BNBias, CLFWeight, CLFBias, OtherWeight, OtherBias };

// Reporting label for the five-way split. BN biases are reported as "Other Bias".
std::string report_label(GroupKind kind);
const std::vector<std::string>& report_labels();
std::string to_string(GroupKind kind);

/// One named parameter tensor inside the flat vector, e.g. "dense0.weight".
struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  GroupKind kind = GroupKind::OtherWeight;
  // Elements per filter; 0 means the group has no filter structure (biases,
  // BN affine). Conv filters are one output channel, dense filters one row.
  std::size_t filter_size = 0;

  bool has_filters() const { return filter_size > 0; }
  std::size_t filter_count() const { return has_filters() ? size / filter_size : 0; }
};

class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<ParamGroup> groups);

  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::size_t size() const { return size_; }
  const ParamGroup* find(const std::string& name) const;

  friend bool operator==(const ParamLayout& a, const ParamLayout& b);

 private:
  std::vector<ParamGroup> groups_;
  std::size_t size_ = 0;
};

bool operator==(const ParamGroup& a, const ParamGroup& b);

/// Flat learnable-parameter vector plus the layout describing its groups.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::shared_ptr<const ParamLayout> layout, double fill = 0.0);
  ParamVector(std::shared_ptr<const ParamLayout> layout, std::vector<double> values);

  // Single-group convenience: one OtherWeight group named "w" with the given
  // filter size (0 = no filters).
  static ParamVector flat(std::vector<double> values, std::size_t filter_size = 0);

  const ParamLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParamLayout>& layout_ptr() const { return layout_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }
  const std::vector<double>& storage() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> group(const ParamGroup& g) { return std::span(values_).subspan(g.offset, g.size); }
  std::span<const double> group(const ParamGroup& g) const {
    return std::span(values_).subspan(g.offset, g.size);
  }

  // Same layout, new values.
  ParamVector with_values(std::vector<double> values) const;

  bool same_layout(const ParamVector& other) const;
  bool all_finite() const;
  std::uint64_t hash() const;

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.same_layout(b) && a.values_ == b.values_;
  }

 private:
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<double> values_;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Per five-way report label.
using GroupStats = std::map<std::string, MeanStd>;

struct SignConsistency {
  double overall = 0.0;
  std::map<std::string, double> per_group;  // keyed by report label
};

namespace params {

// sign(0) == +1.
ParamVector sign(const ParamVector& v);
ParamVector sgp(const ParamVector& v);
ParamVector abs(const ParamVector& v);
ParamVector negate(const ParamVector& v);
ParamVector scale(const ParamVector& v, double c);

// a + c*b
ParamVector axpy(const ParamVector& a, double c, const ParamVector& b);
// (1 - t)*a + t*b
ParamVector lerp(const ParamVector& a, const ParamVector& b, double t);
ParamVector subtract(const ParamVector& a, const ParamVector& b);
ParamVector hadamard(const ParamVector& a, const ParamVector& b);

double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& v);
double cosine(const ParamVector& a, const ParamVector& b);

// eps / ||eps|| * ||theta||. Throws NumericError on a zero noise vector.
ParamVector ns_scale(const ParamVector& eps, const ParamVector& theta);

// Per-filter rescaling: each filter of eps gets the norm of the matching
// filter of theta. Groups without filters are rescaled as one unit.
ParamVector filter_ns(const ParamVector& eps, const ParamVector& theta);

// Diagonal of the adaptive-sharpness operator: filter norm on filter
// positions, |w| elsewhere.
ParamVector adaptive_diag(const ParamVector& theta);

SignConsistency sign_consistency_ratio(const ParamVector& a, const ParamVector& b);

// Mean/std per five-way report label.
GroupStats group_stats(const ParamVector& v);

// Mean per named tensor, in layout order.
std::vector<double> group_means(const ParamVector& v);

// Fraction of strictly positive entries.
double positive_fraction(std::span<const double> values);

}  // namespace params

void require_same_layout(const ParamVector& a, const ParamVector& b, const char* what);

}  // namespace asym
