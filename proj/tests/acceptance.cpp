// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "asym/checkpoint.hpp"
#include "asym/datasets.hpp"
#include "asym/fed.hpp"
#include "asym/noise.hpp"
#include "asym/probes.hpp"
#include "asym/rng.hpp"
#include "asym/scan.hpp"
#include "oracles.hpp"

using namespace asym;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------- fixtures

const DataSplit& digits() {
  static const DataSplit d = load_digits(0);
  return d;
}

const Model& trained_mlp_bn() {
  static const Model m = train(Model::initialize(Architecture::parse("mlp-bn"), 0), digits().train, TrainConfig{}).model;
  return m;
}

ScanResult default_scan(const Model& m, const NoiseVector& eps, Normalization n = Normalization::NS) {
  ScanConfig cfg;
  cfg.normalization = n;
  return scan_1d(m, eps, cfg, digits().test, digits().train);
}

NoiseVector noise(const Model& m, NoiseKind kind, NoiseTransform t, std::uint64_t seed, double ratio = 0.0) {
  NoiseSpec spec;
  spec.kind = kind;
  spec.transform = t;
  spec.seed = seed;
  spec.ratio = ratio;
  return realize(spec, m);
}

// Gaps of raw G(0,1) scans over noise seeds 0..4 on the trained model.
const std::vector<double>& raw_gaussian_gaps() {
  static const std::vector<double> gaps = [] {
    std::vector<double> g;
    for (std::uint64_t s = 0; s < 5; ++s)
      g.push_back(asymmetry_stats(default_scan(trained_mlp_bn(),
                                               noise(trained_mlp_bn(), CommonKind::Gauss01, NoiseTransform::None, s)))
                      .gap);
    return g;
  }();
  return gaps;
}

bool in_raw_band(double gap) {
  const auto& g = raw_gaussian_gaps();
  return std::fabs(gap - mean_of(g)) <= 3.0 * sample_sd(g);
}

std::string band_text() {
  const auto& g = raw_gaussian_gaps();
  return fmt("[%.4f, %.4f]", mean_of(g) - 3 * sample_sd(g), mean_of(g) + 3 * sample_sd(g));
}

// ---------------------------------------------------------------- criteria

Outcome c1_gradient_oracle() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> width(3, 6), classes(2, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t in = width(rng), hidden = width(rng), C = classes(rng), batch = 7;
    const auto arch = Architecture::parse("input=" + std::to_string(in) + ";dense=" + std::to_string(hidden) +
                                          ";bn;relu;dense=" + std::to_string(C) + ";softmax");
    Model m = Model::initialize(arch, trial);
    std::vector<double> theta(m.params().size());
    for (double& v : theta) v = u(rng);
    m.set_params(m.params().with_values(theta));
    Tensor x({batch, in});
    for (double& v : x.storage()) v = u(rng);
    std::vector<int> y(batch);
    for (auto& v : y) v = static_cast<int>(rng() % C);

    ForwardCache cache;
    Model work = m;
    forward(work, x, Mode::Train, &cache);
    const auto analytic = backward(work, cache, y).storage();
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& p) { return oracle::train_mode_loss(m.with_params(m.params().with_values(p)), x, y); },
        theta, 1e-5);
    worst = std::max(worst, oracle::max_rel_error(analytic, numeric, 1e-4));
  }
  return {worst < 1e-5, fmt("max relative error %.2e over 5 random MLP-BN instances (floor 1e-4)", worst)};
}

Outcome c2_hessian_oracle() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_trace = 0.0, worst_quad = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t C = 2 + rng() % 4, d = 1 + rng() % 8;
    Tensor W({C, d});
    for (double& v : W.storage()) v = u(rng);
    std::vector<double> h(d);
    for (double& v : h) v = 2.0 * u(rng);
    const int y = static_cast<int>(rng() % C);

    // Sum of second central differences of -log p_y along every W coordinate.
    const double step = 1e-4, f0 = probes::sample_loss(W, h, y);
    double fd_trace = 0.0;
    for (std::size_t k = 0; k < W.size(); ++k) {
      Tensor Wp = W, Wm = W;
      Wp[k] += step;
      Wm[k] -= step;
      fd_trace += (probes::sample_loss(Wp, h, y) - 2.0 * f0 + probes::sample_loss(Wm, h, y)) / (step * step);
    }
    const double tr_h = probes::hessian_trace(W, h).tr_h;
    worst_trace = std::max(worst_trace, std::fabs(tr_h - fd_trace) / std::max(std::fabs(fd_trace), 1e-12));

    if (C * d <= 32) {
      const auto p = probes::softmax_probs(W, h);
      Tensor eta({C, d});
      for (double& v : eta.storage()) v = u(rng);
      // H[(c,i),(c',j)] = (delta_cc' p_c - p_c p_c') h_i h_j, materialized.
      const std::size_t n = C * d;
      std::vector<double> H(n * n);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t c2 = 0; c2 < C; ++c2)
            for (std::size_t j = 0; j < d; ++j)
              H[(c * d + i) * n + c2 * d + j] = ((c == c2 ? p[c] : 0.0) - p[c] * p[c2]) * h[i] * h[j];
      double q = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) q += eta[a] * H[a * n + b] * eta[b];
      const double k = probes::hessian_quadratic(W, h, eta);
      worst_quad = std::max(worst_quad, std::fabs(k - q) / std::max(std::fabs(q), 1e-300));
    }
  }
  return {worst_trace < 1e-4 && worst_quad < 1e-10,
          fmt("trace rel err %.2e (tol 1e-4), quadratic form rel err %.2e (tol 1e-10)", worst_trace, worst_quad)};
}

Outcome c3_ns_exactness() {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_norm = 0.0, worst_cos = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    std::vector<double> e(n), t(n);
    for (double& v : e) v = g(rng) * (1 + trial % 7);
    for (double& v : t) v = g(rng);
    const auto out = params::ns_scale(ParamVector::flat(e), ParamVector::flat(t));
    const std::vector<double> r(out.values().begin(), out.values().end());
    worst_norm = std::max(worst_norm, std::fabs(oracle::l2(r) - oracle::l2(t)) / oracle::l2(t));
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += r[i] * e[i];
    worst_cos = std::max(worst_cos, std::fabs(1.0 - dot / (oracle::l2(r) * oracle::l2(e))));
  }

  // Filter NS on a conv + dense layout, checked filter by filter.
  const auto arch = Architecture::parse("input=2x6x6;conv=4:3;bn;relu;flatten;dense=5;bn;relu;dense=3;softmax");
  double worst_filter = 0.0;
  std::size_t filters = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = Model::initialize(arch, trial);
    std::vector<double> e(m.params().size());
    for (double& v : e) v = g(rng);
    const ParamVector eps = m.params().with_values(e);
    const ParamVector out = params::filter_ns(eps, m.params());
    for (const auto& grp : m.params().layout().groups()) {
      const std::size_t unit = grp.filter_size ? grp.filter_size : grp.size;
      for (std::size_t off = 0; off < grp.size; off += unit) {
        std::vector<double> r, t;
        for (std::size_t k = 0; k < unit; ++k) {
          r.push_back(out[grp.offset + off + k]);
          t.push_back(m.params()[grp.offset + off + k]);
        }
        worst_filter = std::max(worst_filter, std::fabs(oracle::l2(r) - oracle::l2(t)) / std::max(oracle::l2(t), 1e-300));
        ++filters;
      }
    }
  }
  return {worst_norm <= 1e-12 && worst_cos <= 1e-12 && worst_filter <= 1e-12,
          fmt("ns norm rel err %.1e, 1-cos %.1e over 100 vectors; filter norm rel err %.1e over %zu units",
              worst_norm, worst_cos, worst_filter, filters)};
}

Outcome c4_asymmetric_valley() {
  const Model& m = trained_mlp_bn();
  const double train_err = evaluate(m, digits().train).error;
  std::vector<double> sign_gaps;
  bool each_side = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = asymmetry_stats(default_scan(m, noise(m, CommonKind::Gauss01, NoiseTransform::SignReplace, s)));
    each_side = each_side && a.pos_mean < a.neg_mean;
    sign_gaps.push_back(a.gap);
  }
  std::vector<double> raw_abs;
  for (double g : raw_gaussian_gaps()) raw_abs.push_back(std::fabs(g));
  const double sign_mean = std::fabs(mean_of(sign_gaps)), raw_mean = mean_of(raw_abs);
  return {train_err < 0.05 && each_side && sign_mean >= 5.0 * raw_mean,
          fmt("train error %.4f; sign-consistent |gap| %.4f vs 5 x raw |gap| %.4f; pos<neg on all seeds: %s",
              train_err, sign_mean, 5.0 * raw_mean, each_side ? "yes" : "no")};
}

Outcome c5_sign_ratio() {
  const Model& m = trained_mlp_bn();
  std::vector<double> rs, pos(11, 0.0), neg(11, 0.0);
  for (int i = 0; i <= 10; ++i) rs.push_back(i / 10.0);
  for (std::uint64_t s = 0; s < 3; ++s)
    for (int i = 0; i <= 10; ++i) {
      const auto a = asymmetry_stats(default_scan(m, noise(m, CommonKind::Gauss01, NoiseTransform::SignRatio, s, rs[i])));
      pos[i] += a.pos_mean / 3.0;
      neg[i] += a.neg_mean / 3.0;
    }
  const double sp = oracle::spearman(rs, pos), sn = oracle::spearman(rs, neg);
  return {sp <= -0.9 && sn >= 0.9, fmt("Spearman(r, pos_mean) %.3f, Spearman(r, neg_mean) %.3f (seed-averaged)", sp, sn)};
}

Outcome c6_special_directions() {
  const Model& m = trained_mlp_bn();
  auto gap = [&](SpecialKind k) {
    return asymmetry_stats(default_scan(m, noise(m, k, NoiseTransform::None, 0))).gap;
  };
  const double g2 = gap(SpecialKind::Theta), g3 = gap(SpecialKind::Sign);
  const double g5 = gap(SpecialKind::Sgp), g6 = gap(SpecialKind::SgpCentered);
  const bool pass = g2 > 0 && g3 > 0 && in_raw_band(g5) && in_raw_band(g6);
  return {pass, fmt("gap theta %.4f, sign %.4f (need > 0); sgp %.4f, sgp-centered %.4f (need within raw band %s)",
                    g2, g3, g5, g6, band_text().c_str())};
}

Outcome c7_bn_init() {
  const BnInit kinds[] = {BnInit::Ones, BnInit::Uniform01, BnInit::Gauss01};
  const auto reports = bn_init_study(Architecture::parse("mlp-bn"), digits().train, digits().test, kinds, BnInitConfig{});
  bool pass = true;
  std::ostringstream os;
  for (const auto& r : reports) {
    const double gn = r.ns_asymmetry.gap, gf = r.filter_asymmetry.gap;
    if (r.init == BnInit::Gauss01)
      pass = pass && std::fabs(r.positive_final - 0.5) <= 0.1 && in_raw_band(gn) && in_raw_band(gf);
    else
      pass = pass && r.positive_final > 0.9 && gn > 0 && gf > 0;
    os << to_string(r.init) << fmt(": positive %.3f, gap ns %.4f filter %.4f; ", r.positive_final, gn, gf);
  }
  os << "band " << band_text();
  return {pass, os.str()};
}

// FedAvg written against public primitives only, following the seed
// derivations documented for server_loop.
Model reference_fedavg(const fed::FedConfig& cfg, const Architecture& arch) {
  const auto& train_set = digits().train;
  Model global = Model::initialize(arch, derive_seed(cfg.seed, "fed-init"));
  const auto shards = fed::dirichlet_partition(train_set.labels, train_set.num_classes, cfg.k, cfg.alpha, cfg.seed);
  Rng cr = make_rng(cfg.seed, "fed-calibration");
  auto calib = sample_without_replacement(train_set.size(), cfg.calibration_size, cr);
  std::sort(calib.begin(), calib.end());
  const Dataset calibration = train_set.subset(calib);
  for (std::size_t t = 1; t <= cfg.t; ++t) {
    Rng pick = make_rng(cfg.seed, "fed-select", t);
    auto sel = sample_without_replacement(cfg.k, cfg.clients_per_round(), pick);
    std::sort(sel.begin(), sel.end());
    TrainConfig tc;
    tc.lr = cfg.lr;
    tc.momentum = cfg.momentum;
    tc.weight_decay = cfg.weight_decay;
    tc.batch_size = cfg.b;
    tc.epochs = cfg.e;
    tc.schedule = LrSchedule::Constant;
    tc.seed = derive_seed(cfg.seed, "fed-local", t);
    std::vector<ParamVector> results;
    for (std::size_t k : sel) results.push_back(train(global, train_set.subset(shards[k].indices), tc).model.params());
    const double n = static_cast<double>(results.size());
    std::vector<double> avg(results[0].size(), 0.0);
    for (std::size_t j = 1; j < results.size(); ++j)
      for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += (results[j][i] - results[0][i]) / n;
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += results[0][i];
    global = bn_recompute(global.with_params(results[0].with_values(avg)), calibration);
  }
  return global;
}

Outcome c8_fedsign_degeneracy() {
  fed::FedConfig cfg;
  cfg.k = 4;
  cfg.t = 3;
  cfg.e = 1;
  cfg.alpha = 0.5;
  cfg.seed = 7;
  cfg.gamma = 0.0;
  const auto arch = Architecture::parse("mlp-bn");
  const auto a = fed::server_loop(cfg, arch, digits().train, digits().test);
  const auto b = fed::server_loop(cfg, arch, digits().train, digits().test);
  const auto ref = reference_fedavg(cfg, arch);
  const std::string ha = checkpoint_id(a.model), hb = checkpoint_id(b.model), hr = checkpoint_id(ref);
  return {ha == hb && ha == hr,
          "fedsign(gamma=0) " + ha + ", repeat " + hb + ", reference fedavg " + hr};
}

Outcome c9_dirichlet() {
  const auto& labels = digits().train.labels;
  const std::size_t C = digits().train.num_classes, N = labels.size(), K = 10;
  std::vector<double> global(C, 0.0);
  for (int y : labels) global[static_cast<std::size_t>(y)] += 1.0 / static_cast<double>(N);
  bool partition_ok = true, iid_ok = true, skew_ok = true;
  double worst_dev = 0.0, weakest_peak = 1.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (double alpha : {1000.0, 0.1}) {
      const auto shards = fed::dirichlet_partition(labels, C, K, alpha, seed);
      std::vector<int> seen(N, 0);
      double peak = 0.0;
      for (const auto& s : shards) {
        partition_ok = partition_ok && !s.indices.empty();
        std::vector<double> hist(C, 0.0);
        for (std::size_t i : s.indices) {
          seen.at(i)++;
          hist[static_cast<std::size_t>(labels[i])] += 1.0 / static_cast<double>(s.indices.size());
        }
        for (std::size_t c = 0; c < C; ++c) {
          if (alpha > 1.0) worst_dev = std::max(worst_dev, std::fabs(hist[c] - global[c]));
          peak = std::max(peak, hist[c]);
        }
      }
      partition_ok = partition_ok && std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; });
      if (alpha < 1.0) {
        skew_ok = skew_ok && peak > 0.6;
        weakest_peak = std::min(weakest_peak, peak);
      }
    }
  }
  iid_ok = worst_dev <= 0.05;
  return {partition_ok && iid_ok && skew_ok,
          fmt("exact partition %s; alpha=1000 worst class-share deviation %.4f (tol 0.05); alpha=0.1 min over seeds "
              "of the largest single-class share %.3f (need > 0.6)",
              partition_ok ? "yes" : "no", worst_dev, weakest_peak)};
}

Outcome c10_fedsign_effect() {
  const auto arch = Architecture::parse("mlp-bn");
  fed::FedConfig base;
  base.k = 10;
  base.q = 1.0;
  base.t = 30;
  base.e = 2;
  base.alpha = 0.5;
  base.reduction = fed::Reduction::Mean;
  auto run = [&](double gamma, std::uint64_t seed) {
    fed::FedConfig c = base;
    c.gamma = gamma;
    c.seed = seed;
    return fed::server_loop(c, arch, digits().train, digits().test);
  };
  std::size_t higher = 0, rounds = 0;
  std::map<double, std::vector<double>> acc;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::map<double, fed::FedRun> runs;
    for (double g : {0.0, 0.001, 0.01, 0.1}) {
      runs.emplace(g, run(g, seed));
      acc[g].push_back(runs.at(g).rounds.back().acc);
    }
    for (std::size_t t = 0; t < base.t; ++t, ++rounds)
      higher += runs.at(0.1).rounds[t].mean_ssr > runs.at(0.0).rounds[t].mean_ssr;
  }
  const double frac = static_cast<double>(higher) / static_cast<double>(rounds);
  const double fedavg = mean_of(acc[0.0]);
  double best = -1.0, best_g = 0.0;
  for (double g : {0.001, 0.01, 0.1})
    if (mean_of(acc[g]) > best) best = mean_of(acc[g]), best_g = g;
  return {frac >= 0.9 && best >= fedavg - 0.005,
          fmt("SSR(gamma=0.1) > SSR(gamma=0) in %.1f%% of %zu seed-rounds; accuracy fedavg %.4f, fedsign best "
              "(gamma=%g) %.4f",
              100.0 * frac, rounds, fedavg, best_g, best)};
}

Outcome c11_relu_sim() {
  probes::ReluSimConfig cfg;
  const auto r = probes::relu_sim(cfg, 0);
  bool increasing = true;
  for (std::size_t i = 1; i < r.rows.size(); ++i) increasing = increasing && r.rows[i].mean > r.rows[i - 1].mean;
  const auto& zero = r.rows[2];
  const double expected = cfg.a * r.h_norm_sq;
  const double se = zero.std / std::sqrt(static_cast<double>(cfg.trials));
  const bool close = std::fabs(zero.mean - expected) <= 4.0 * se;
  std::ostringstream os;
  for (const auto& row : r.rows) os << fmt("%.3f ", row.mean);
  return {increasing && close,
          "means " + os.str() + fmt("; lambda=0 mean %.4f vs a||h||^2 %.4f (4 s.e. = %.4f)", zero.mean, expected, 4 * se)};
}

Outcome c12_activation_confusion() {
  const Model& m = trained_mlp_bn();
  const auto eps = noise(m, CommonKind::Gauss01, NoiseTransform::SignReplace, 0);
  const auto dir = scan_direction(eps.values, m.params(), Normalization::NS, 1.0);
  std::vector<double> lambdas;
  for (double a : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    lambdas.push_back(-a);
    lambdas.push_back(a);
  }
  bool pass = true;
  std::ostringstream os;
  for (const std::string layer : {"relu0", "relu1"}) {
    const auto rows = probes::confusion_sweep(m, dir, lambdas, digits().test, digits().train, layer);
    os << layer << ":";
    for (std::size_t i = 0; i < rows.size(); i += 2) {
      pass = pass && rows[i + 1].second.diag_sum >= rows[i].second.diag_sum;
      os << fmt(" %.1f(%.3f/%.3f)", rows[i + 1].first, rows[i + 1].second.diag_sum, rows[i].second.diag_sum);
    }
    os << "; ";
  }
  return {pass, os.str() + "format a(+a/-a)"};
}

Outcome c13_soup() {
  SoupConfig cfg;
  cfg.curve_lambdas.clear();
  const auto warm = soup_experiment(trained_mlp_bn(), digits().train, digits().test, cfg);
  const auto scratch =
      soup_experiment(Model::initialize(Architecture::parse("mlp-bn"), 0), digits().train, digits().test, cfg);
  std::vector<double> ssr, gap, epochs, ssr_scratch;
  std::ostringstream os;
  for (const auto& r : warm.rows) {
    ssr.push_back(r.ssr_ab);
    gap.push_back(r.gap);
    os << fmt("%zu:%.4f/%.4f ", r.epoch, r.ssr_ab, r.gap);
  }
  os << "| scratch ssr_ab";
  for (const auto& r : scratch.rows) {
    epochs.push_back(static_cast<double>(r.epoch));
    ssr_scratch.push_back(r.ssr_ab);
    os << fmt(" %.4f", r.ssr_ab);
  }
  const double rho = oracle::spearman(ssr, gap), trend = oracle::spearman(epochs, ssr_scratch);
  return {rho > 0.0 && trend <= -0.9,
          fmt("Spearman(SSR_AB, gap) %.3f (need > 0); scratch Spearman(epoch, SSR_AB) %.3f (need <= -0.9); ", rho,
              trend) + "epoch:ssr/gap " + os.str()};
}

Outcome c14_gradient_orthogonality() {
  const auto g = probes::gradient_orthogonality(trained_mlp_bn(), digits().train);
  return {!g.zero_gradient && std::fabs(g.cosine) < 0.1, fmt("cosine(sign(theta), grad) %.4f", g.cosine)};
}

Outcome c15_softmax_metrics() {
  const auto probe = probes::train_linear_probe(digits().train);
  const auto test_probe = probes::with_features(probe, digits().test);
  bool pass = true;
  std::ostringstream os;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto rows = probes::softmax_metrics(test_probe, probes::probe_noise(probe, seed), {-0.5, 0.0, 0.5}, true);
    pass = pass && rows[2].tr_p < rows[0].tr_p && rows[2].tr_h < rows[0].tr_h;
    os << fmt("seed %llu: trP %.4f vs %.4f, trH %.3f vs %.3f; ", static_cast<unsigned long long>(seed), rows[2].tr_p,
              rows[0].tr_p, rows[2].tr_h, rows[0].tr_h);
  }
  return {pass, os.str() + "(+0.5 vs -0.5)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", c1_gradient_oracle},
      {"hessian trace oracle", c2_hessian_oracle},
      {"ns exactness", c3_ns_exactness},
      {"asymmetric valley", c4_asymmetric_valley},
      {"sign-ratio monotonicity", c5_sign_ratio},
      {"special directions", c6_special_directions},
      {"bn initialization", c7_bn_init},
      {"fedsign degeneracy", c8_fedsign_degeneracy},
      {"dirichlet partition", c9_dirichlet},
      {"fedsign effect", c10_fedsign_effect},
      {"relu simulation", c11_relu_sim},
      {"activation confusion", c12_activation_confusion},
      {"soup correlation", c13_soup},
      {"gradient orthogonality", c14_gradient_orthogonality},
      {"softmax metrics", c15_softmax_metrics},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s C%02d %-24s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
