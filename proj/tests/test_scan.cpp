#include <doctest.h>

#include <cmath>

#include "asym/datasets.hpp"
#include "asym/errors.hpp"
#include "asym/nn.hpp"
#include "asym/noise.hpp"
#include "asym/scan.hpp"

using namespace asym;

namespace {

Model fixture_model(const Dataset& train_set) {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 32;
  return train(Model::initialize(Architecture::parse("input=8;dense=16;bn;relu;dense=3;softmax"), 1), train_set, cfg)
      .model;
}

struct Fixture {
  DataSplit data = make_blobs({3, 240, 8, 1.5, 21});
  Model model = fixture_model(data.train);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

ScanResult curve(const std::vector<double>& lambdas, const std::vector<double>& errors) {
  ScanResult r;
  r.config.lambdas = lambdas;
  for (std::size_t i = 0; i < lambdas.size(); ++i) r.points.push_back({lambdas[i], errors[i], 0.0, false});
  return r;
}

ScanConfig small_grid(Normalization n = Normalization::NS) {
  ScanConfig cfg;
  cfg.lambdas = uniform_grid(-1.0, 1.0, 9);
  cfg.normalization = n;
  return cfg;
}

}  // namespace

TEST_CASE("uniform grids include both ends and an exact zero") {
  const auto g = uniform_grid(-1.0, 1.0, 41);
  CHECK(g.size() == 41);
  CHECK(g.front() == -1.0);
  CHECK(g.back() == 1.0);
  CHECK(g[20] == 0.0);
  CHECK_NOTHROW(ScanConfig{}.validate());
}

TEST_CASE("scan config validation") {
  ScanConfig cfg;
  cfg.lambdas = {-1.0, 0.5, 1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambdas = {-1.0, -0.5, 0.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambdas = {-2.0, 0.0, 2.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambdas = {0.5, 0.0, -0.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.s = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("asymmetry statistics") {
  const std::vector<double> g = {-1, -0.5, 0, 0.5, 1};
  CHECK(asymmetry_stats(curve(g, {0.3, 0.1, 0.05, 0.1, 0.3})).gap == 0.0);
  CHECK(asymmetry_stats(curve(g, {1, 0.5, 0, 0.5, 1})).gap == 0.0);
  const auto a = asymmetry_stats(curve(g, {1, 0.5, 0, 0, 0}));
  CHECK(a.neg_mean == 0.75);
  CHECK(a.pos_mean == 0.0);
  CHECK(a.gap == 0.75);
  CHECK_THROWS_AS(asymmetry_stats(curve({-1, 0, 0.5}, {0, 0, 0})), ConfigError);
}

TEST_CASE("scan leaves the model untouched and its center is the recomputed evaluation") {
  const auto& f = fixture();
  const auto before = f.model.params().hash();
  const auto bn_before = f.model.bn_state();
  const auto noise = sample_common(CommonKind::Gauss01, f.model.params().layout_ptr(), 3);
  const auto r = scan_1d(f.model, noise, small_grid(), f.data.test, f.data.train);
  CHECK(f.model.params().hash() == before);
  CHECK(f.model.bn_state() == bn_before);
  const auto center = evaluate(bn_recompute(f.model, f.data.train), f.data.test);
  CHECK(r.points[4].lambda == 0.0);
  CHECK(r.points[4].error == center.error);
  CHECK(r.points[4].ce == doctest::Approx(center.ce).epsilon(1e-12));
  for (const auto& p : r.points) {
    CHECK(p.error >= 0.0);
    CHECK(p.error <= 1.0);
    CHECK(p.ce >= 0.0);
  }
  CHECK(r.checkpoint_id.size() > 0);
}

TEST_CASE("center point does not depend on the noise") {
  const auto& f = fixture();
  const auto layout = f.model.params().layout_ptr();
  const auto a = scan_1d(f.model, sample_common(CommonKind::Ones, layout, 0), small_grid(), f.data.test, f.data.train);
  const auto b = scan_1d(f.model, make_special(SpecialKind::Sign, nullptr, f.model.params()),
                         small_grid(Normalization::FilterNS), f.data.test, f.data.train);
  CHECK(a.points[4].error == b.points[4].error);
  CHECK(a.points[4].ce == b.points[4].ce);
}

TEST_CASE("an all-zero raw direction gives a flat curve") {
  const auto& f = fixture();
  NoiseVector zero{ParamVector(f.model.params().layout_ptr(), 0.0), {}};
  const auto r = scan_1d(f.model, zero, small_grid(Normalization::Raw), f.data.test, f.data.train);
  for (const auto& p : r.points) {
    CHECK(p.error == r.points[0].error);
    CHECK(p.ce == r.points[0].ce);
  }
  CHECK_THROWS_AS(scan_1d(f.model, zero, small_grid(Normalization::NS), f.data.test, f.data.train), NumericError);
}

TEST_CASE("scans are reproducible") {
  const auto& f = fixture();
  const auto noise = sample_common(CommonKind::Uniform11, f.model.params().layout_ptr(), 5);
  const auto a = scan_1d(f.model, noise, small_grid(), f.data.test, f.data.train);
  const auto b = scan_1d(f.model, noise, small_grid(), f.data.test, f.data.train);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].error == b.points[i].error);
    CHECK(a.points[i].ce == b.points[i].ce);
  }
}

TEST_CASE("huge perturbations are clipped instead of thrown") {
  const auto& f = fixture();
  ScanConfig cfg = small_grid(Normalization::Raw);
  cfg.s = 10.0;
  auto noise = sample_common(CommonKind::Gauss01, f.model.params().layout_ptr(), 1);
  noise.values[0] = 1e308;
  const auto r = scan_1d(f.model, noise, cfg, f.data.test, f.data.train);
  for (const auto& p : r.points) {
    if (p.lambda != 0.0) CHECK(p.non_finite);
    if (p.non_finite) {
      CHECK(p.error == 1.0);
      CHECK(std::isinf(p.ce));
    }
  }
}

TEST_CASE("raw scan along the difference reproduces interpolation") {
  const auto& f = fixture();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 9;
  const Model other = train(f.model, f.data.train, cfg).model;
  const auto diff = params::subtract(other.params(), f.model.params());
  const std::vector<double> lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};
  const auto interp = interpolate_two(f.model, other, lambdas, f.data.test, f.data.train);

  ScanConfig sc;
  sc.lambdas = lambdas;
  sc.normalization = Normalization::Raw;
  const auto raw = scan_1d(f.model, NoiseVector{diff, {}}, sc, f.data.test, f.data.train);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    CHECK(raw.points[i].error == doctest::Approx(interp.curve.points[i].error).epsilon(1e-12));
    CHECK(raw.points[i].ce == doctest::Approx(interp.curve.points[i].ce).epsilon(1e-9));
  }
  CHECK(interp.curve.points[0].error == evaluate(bn_recompute(f.model, f.data.train), f.data.test).error);
  CHECK(interp.curve.points[4].error == evaluate(bn_recompute(other, f.data.train), f.data.test).error);
}

TEST_CASE("interpolating a model with itself is flat") {
  const auto& f = fixture();
  const auto r = interpolate_two(f.model, f.model, uniform_grid(-1.0, 2.0, 7), f.data.test, f.data.train);
  for (const auto& p : r.curve.points) CHECK(p.error == r.curve.points[0].error);
}

TEST_CASE("endpoint sign diagnostics ignore positive scaling of the difference") {
  const auto& f = fixture();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 4;
  const Model other = train(f.model, f.data.train, cfg).model;
  const auto eps = params::subtract(other.params(), f.model.params());
  const auto r = interpolate_two(f.model, other, {0.0, 1.0}, f.data.test, f.data.train);
  CHECK(r.ssr_first.overall == params::sign_consistency_ratio(f.model.params(), eps).overall);
  CHECK(r.ssr_second.overall == params::sign_consistency_ratio(other.params(), eps).overall);
  for (double c : {1e-3, 7.0}) {
    const auto scaled = params::scale(eps, c);
    CHECK(params::sign_consistency_ratio(f.model.params(), scaled).overall == r.ssr_first.overall);
    CHECK(params::sign_consistency_ratio(other.params(), scaled).per_group == r.ssr_second.per_group);
  }
}

TEST_CASE("interpolation rejects mismatched models") {
  const auto& f = fixture();
  const Model other = Model::initialize(Architecture::parse("input=8;dense=4;softmax"), 0);
  CHECK_THROWS_AS(interpolate_two(f.model, other, {0.0, 1.0}, f.data.test, f.data.train), ShapeError);
}

TEST_CASE("small and large batch endpoints: the one with higher SSR is flatter forward") {
  const auto data = load_digits();
  const Model init = Model::initialize(Architecture::parse("mlp-bn"), 2);
  TrainConfig cfg;
  cfg.batch_size = 8;
  const Model small = train(init, data.train, cfg).model;
  cfg.batch_size = 256;
  const Model large = train(init, data.train, cfg).model;
  const auto r = interpolate_two(small, large, uniform_grid(-1.0, 2.0, 25), data.test, data.train);
  // Local asymmetry around an endpoint at lambda = c: mean error over c - d minus
  // mean error over c + d for offsets d in (0, 0.5].
  auto local_gap = [&](double c) {
    double back = 0.0, fwd = 0.0;
    int n = 0;
    for (const auto& p : r.curve.points) {
      const double d = p.lambda - c;
      if (d > 1e-9 && d <= 0.5 + 1e-9) {
        fwd += p.error;
        ++n;
      } else if (d < -1e-9 && d >= -0.5 - 1e-9) {
        back += p.error;
      }
    }
    return (back - fwd) / n;
  };
  const double gap_small = local_gap(0.0), gap_large = local_gap(1.0);
  MESSAGE("ssr small=" << r.ssr_first.overall << " large=" << r.ssr_second.overall << " gap small=" << gap_small
                       << " large=" << gap_large);
  const bool second_higher = r.ssr_second.overall > r.ssr_first.overall;
  CHECK((second_higher ? gap_large : gap_small) > 0.0);
}

TEST_CASE("soup at epoch 0 has identical models") {
  const auto& f = fixture();
  SoupConfig cfg;
  cfg.checkpoints = {0, 1, 15};
  cfg.train.epochs = 15;
  cfg.train.batch_size = 16;
  cfg.curve_lambdas = {};
  const Model init = Model::initialize(f.model.arch(), 3);
  const auto rep = soup_experiment(init, f.data.train, f.data.test, cfg);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].ssr_ia == 1.0);
  CHECK(rep.rows[0].ssr_ib == 1.0);
  CHECK(rep.rows[0].ssr_ab == 1.0);
  CHECK(rep.rows[0].gap == 0.0);
  for (const auto& row : rep.rows) {
    CHECK(row.ssr_ab >= 0.0);
    CHECK(row.ssr_ab <= 1.0);
    CHECK(row.gap == doctest::Approx(row.acc_mid - 0.5 * (row.acc_a + row.acc_b)));
  }
  CHECK(rep.rows[2].ssr_ab < rep.rows[1].ssr_ab);
}

TEST_CASE("bn init study starts from the requested weight distributions") {
  const auto& f = fixture();
  BnInitConfig cfg;
  cfg.train.epochs = 1;
  cfg.scan.lambdas = uniform_grid(-1.0, 1.0, 5);
  const std::vector<BnInit> kinds = {BnInit::Ones, BnInit::Gauss01};
  const auto arch = Architecture::parse("input=8;dense=400;bn;relu;dense=3;softmax");
  const auto reps = bn_init_study(arch, f.data.train, f.data.test, kinds, cfg);
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].positive_init == 1.0);
  CHECK(reps[0].init_weights.size() == 400);
  const double sigma = std::sqrt(0.25 / 400.0);
  CHECK(std::fabs(reps[1].positive_init - 0.5) < 3.0 * sigma);
  CHECK(reps[0].ns_scan.points.size() == 5);
  CHECK_THROWS_AS(bn_init_study(Architecture::parse("mlp"), f.data.train, f.data.test, kinds, cfg), ConfigError);
}
