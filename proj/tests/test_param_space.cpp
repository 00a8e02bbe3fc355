#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <set>

#include "asym/architecture.hpp"
#include "asym/errors.hpp"
#include "asym/param_space.hpp"
#include "oracles.hpp"

using namespace asym;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// Two filtered groups plus a bias vector.
std::shared_ptr<const ParamLayout> mixed_layout() {
  return std::make_shared<const ParamLayout>(std::vector<ParamGroup>{
      {"conv0.weight", 0, 12, GroupKind::OtherWeight, 4},
      {"conv0.bias", 12, 3, GroupKind::OtherBias, 0},
      {"dense0.weight", 15, 6, GroupKind::CLFWeight, 3},
  });
}

}  // namespace

TEST_CASE("sign maps zero to +1") {
  const auto v = ParamVector::flat({1.5, -0.2, 3, 0});
  CHECK(params::sign(v).storage() == std::vector<double>{1, -1, 1, 1});
  CHECK(params::sign(params::sign(v)) == params::sign(v));
}

TEST_CASE("sgp marks strictly positive entries") {
  const auto v = ParamVector::flat({1.5, -0.2, 0});
  CHECK(params::sgp(v).storage() == std::vector<double>{1, 0, 0});
  const auto r = ParamVector::flat(gaussian(200, 1));
  const auto both = params::axpy(params::sgp(r), 1.0, params::sgp(params::negate(r)));
  for (double x : both.storage()) CHECK(x == 1.0);
  CHECK(params::hadamard(params::sgp(r), params::sign(r)) == params::sgp(r));
}

TEST_CASE("norm is the flat L2 norm and is homogeneous") {
  CHECK(params::norm(ParamVector::flat({3, 4})) == 5.0);
  CHECK(params::norm(ParamVector::flat({0, 0, 0})) == 0.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto v = ParamVector::flat(gaussian(50, s));
    const double c = gaussian(1, s + 1000)[0];
    CHECK(params::norm(params::scale(v, c)) == doctest::Approx(std::fabs(c) * params::norm(v)).epsilon(1e-13));
  }
}

TEST_CASE("ns_scale matches the target norm and keeps the direction") {
  CHECK(params::ns_scale(ParamVector::flat({2, 0}), ParamVector::flat({3, 4})).storage() ==
        std::vector<double>{5, 0});
  const auto theta = ParamVector::flat(gaussian(40, 2));
  const auto fixed = params::ns_scale(theta, theta);
  CHECK(oracle::max_rel_error(fixed.storage(), theta.storage(), 1e-12) < 1e-14);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto eps = ParamVector::flat(gaussian(40, s + 10));
    const auto out = params::ns_scale(eps, theta);
    CHECK(params::norm(out) == doctest::Approx(params::norm(theta)).epsilon(1e-12));
    CHECK(params::cosine(out, eps) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(params::ns_scale(ParamVector::flat({0, 0}), ParamVector::flat({1, 1})), NumericError);
}

TEST_CASE("filter_ns equals ns_scale when one filter spans the vector") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto eps = ParamVector::flat(gaussian(12, s), 12);
    const auto theta = ParamVector::flat(gaussian(12, s + 50), 12);
    const auto a = params::filter_ns(eps, theta), b = params::ns_scale(eps, theta);
    CHECK(oracle::max_rel_error(a.storage(), b.storage(), 1e-12) < 1e-13);
  }
}

TEST_CASE("filter_ns gives each filter the norm of the matching theta filter") {
  const auto layout = mixed_layout();
  const ParamVector eps(layout, gaussian(layout->size(), 3));
  const ParamVector theta(layout, gaussian(layout->size(), 4));
  const auto out = params::filter_ns(eps, theta);
  // Oracle ranges written out by hand from the layout above.
  const std::vector<std::pair<std::size_t, std::size_t>> ranges = {{0, 4}, {4, 4}, {8, 4}, {12, 3}, {15, 3}, {18, 3}};
  for (auto [begin, len] : ranges) {
    std::vector<double> o(out.storage().begin() + begin, out.storage().begin() + begin + len);
    std::vector<double> t(theta.storage().begin() + begin, theta.storage().begin() + begin + len);
    std::vector<double> e(eps.storage().begin() + begin, eps.storage().begin() + begin + len);
    CHECK(oracle::l2(o) == doctest::Approx(oracle::l2(t)).epsilon(1e-12));
    const double ratio = o[0] / e[0];
    CHECK(ratio > 0.0);
    for (std::size_t i = 0; i < len; ++i) CHECK(o[i] == doctest::Approx(ratio * e[i]).epsilon(1e-12));
  }
}

TEST_CASE("filter_ns zeroes a filter whose theta filter is zero") {
  const auto theta = ParamVector::flat({0, 0, 1, 2}, 2);
  const auto eps = ParamVector::flat({1, -1, 3, 3}, 2);
  const auto out = params::filter_ns(eps, theta);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
}

TEST_CASE("filter_ns throws on a zero-norm noise filter") {
  const auto theta = ParamVector::flat({1, 1, 1, 1}, 2);
  CHECK_THROWS_AS(params::filter_ns(ParamVector::flat({1, 1, 0, 0}, 2), theta), NumericError);
}

TEST_CASE("adaptive_diag uses filter norms and magnitudes") {
  CHECK(params::adaptive_diag(ParamVector::flat({3, 4}, 2)).storage() == std::vector<double>{5, 5});
  CHECK(params::adaptive_diag(ParamVector::flat({-2})).storage() == std::vector<double>{2});
  // On filter positions, T applied to all-ones noise lies in the filter_ns direction family.
  const auto layout = mixed_layout();
  const ParamVector theta(layout, gaussian(layout->size(), 5));
  const ParamVector ones(layout, 1.0);
  const auto t = params::hadamard(params::adaptive_diag(theta), ones);
  const auto direct = params::filter_ns(ones, theta);
  const auto via_t = params::filter_ns(t, theta);
  for (std::size_t i : {0, 5, 11, 15, 20}) CHECK(via_t[i] == doctest::Approx(direct[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < 12; ++i) CHECK(std::fabs(direct[i]) * 2.0 == doctest::Approx(t[i]).epsilon(1e-12));
}

TEST_CASE("sign consistency ratio examples") {
  const auto a = ParamVector::flat({1, -1, 2});
  CHECK(params::sign_consistency_ratio(a, a).overall == 1.0);
  CHECK(params::sign_consistency_ratio(a, params::negate(a)).overall == 0.0);
  CHECK(params::sign_consistency_ratio(a, ParamVector::flat({0.5, 0.3, -1})).overall == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(params::sign_consistency_ratio(a, ParamVector::flat({1, 2})), ShapeError);
}

TEST_CASE("sign consistency ratio is symmetric and scale invariant") {
  const auto layout = mixed_layout();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ParamVector a(layout, gaussian(layout->size(), s)), b(layout, gaussian(layout->size(), s + 100));
    const auto ab = params::sign_consistency_ratio(a, b), ba = params::sign_consistency_ratio(b, a);
    CHECK(ab.overall == ba.overall);
    CHECK(ab.per_group == ba.per_group);
    auto pos = gaussian(layout->size(), s + 200);
    for (double& x : pos) x = std::fabs(x) + 0.1;
    const auto scaled = params::hadamard(a, ParamVector(layout, pos));
    CHECK(params::sign_consistency_ratio(scaled, b).overall == ab.overall);
    CHECK(ab.per_group.size() == 3);
  }
}

TEST_CASE("independent symmetric vectors agree on about half the signs") {
  const std::size_t n = 100000;
  const auto a = ParamVector::flat(gaussian(n, 11)), b = ParamVector::flat(gaussian(n, 12));
  const double sigma = std::sqrt(0.25 / static_cast<double>(n));
  CHECK(std::fabs(params::sign_consistency_ratio(a, b).overall - 0.5) < 3.0 * sigma);
}

TEST_CASE("group statistics and per-tensor means") {
  const auto layout = mixed_layout();
  std::vector<double> v(layout->size(), 2.5);
  v[12] = 1;
  v[13] = -1;
  v[14] = 0;
  const auto stats = params::group_stats(ParamVector(layout, v));
  CHECK(stats.at("Other Weight").mean == 2.5);
  CHECK(stats.at("Other Weight").std == 0.0);
  CHECK(stats.at("Other Bias").mean == 0.0);
  const auto means = params::group_means(ParamVector(layout, v));
  CHECK(means == std::vector<double>{2.5, 0.0, 2.5});

  const auto r = gaussian(layout->size(), 9);
  const auto rs = params::group_stats(ParamVector(layout, r));
  // Welford oracle over the conv0.weight entries only.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    const double d = r[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (r[i] - mean);
  }
  CHECK(rs.at("Other Weight").mean == doctest::Approx(mean).epsilon(1e-13));
  CHECK(rs.at("Other Weight").std == doctest::Approx(std::sqrt(m2 / 12.0)).epsilon(1e-12));
  for (const auto& [label, ms] : rs) CHECK(ms.std >= 0.0);
}

TEST_CASE("model layouts partition the vector and cover the five report labels") {
  for (const char* name : {"mlp-bn", "cnn-bn", "mlp"}) {
    const auto arch = Architecture::parse(name);
    const auto& layout = *arch.param_layout();
    std::size_t offset = 0;
    for (const auto& g : layout.groups()) {
      CHECK(g.offset == offset);
      offset += g.size;
      if (g.has_filters()) CHECK(g.size % g.filter_size == 0);
    }
    CHECK(offset == layout.size());
  }
  const auto cnn_layout = Architecture::parse("cnn-bn").param_layout();
  const auto& groups = cnn_layout->groups();
  std::set<std::string> labels;
  for (const auto& g : groups) labels.insert(report_label(g.kind));
  CHECK(labels.size() == 5);
  CHECK(report_labels().size() == 5);
}

TEST_CASE("layouts must be contiguous with whole filters") {
  CHECK_THROWS_AS(ParamLayout({{"a", 0, 4, GroupKind::OtherWeight, 0}, {"b", 5, 2, GroupKind::OtherBias, 0}}), ShapeError);
  CHECK_THROWS_AS(ParamLayout({{"a", 0, 5, GroupKind::OtherWeight, 2}}), ShapeError);
}
