// Multi-run experiment drivers: model-soup sign consistency and the BN
// initialization study.

#include <algorithm>
#include <map>

#include "asym/errors.hpp"
#include "asym/rng.hpp"
#include "asym/scan.hpp"

namespace asym {

namespace {

std::map<std::size_t, ParamVector> train_with_checkpoints(const Model& init, const Dataset& data,
                                                          TrainConfig cfg, std::uint64_t seed,
                                                          const std::vector<std::size_t>& epochs) {
  std::map<std::size_t, ParamVector> snaps;
  if (std::find(epochs.begin(), epochs.end(), 0) != epochs.end()) snaps.emplace(0, init.params());
  cfg.seed = seed;
  cfg.epochs = epochs.empty() ? 0 : *std::max_element(epochs.begin(), epochs.end());
  TrainHooks hooks;
  hooks.on_epoch_end = [&](std::size_t epoch, const Model& m) {
    if (std::find(epochs.begin(), epochs.end(), epoch) != epochs.end()) snaps.emplace(epoch, m.params());
  };
  train(init, data, cfg, hooks);
  return snaps;
}

}  // namespace

SoupReport soup_experiment(const Model& init, const Dataset& train, const Dataset& test,
                           const SoupConfig& cfg) {
  if (train.size() < 2) throw ConfigError("soup: dataset too small to split");
  const auto [half_a, half_b] = split_halves_stratified(train, cfg.split_seed);
  std::map<std::size_t, ParamVector> snaps_a, snaps_b;
#pragma omp parallel sections
  {
#pragma omp section
    snaps_a = train_with_checkpoints(init, half_a, cfg.train, derive_seed(cfg.train.seed, "soup-a"),
                                     cfg.checkpoints);
#pragma omp section
    snaps_b = train_with_checkpoints(init, half_b, cfg.train, derive_seed(cfg.train.seed, "soup-b"),
                                     cfg.checkpoints);
  }

  SoupReport report;
  const ParamVector& theta_i = init.params();
  for (std::size_t epoch : cfg.checkpoints) {
    const ParamVector& a = snaps_a.at(epoch);
    const ParamVector& b = snaps_b.at(epoch);
    SoupRow row;
    row.epoch = epoch;
    row.ssr_ia = params::sign_consistency_ratio(theta_i, a).overall;
    row.ssr_ib = params::sign_consistency_ratio(theta_i, b).overall;
    row.ssr_ab = params::sign_consistency_ratio(a, b).overall;
    row.acc_a = 1.0 - evaluate_point(init, a, true, test, train).error;
    row.acc_b = 1.0 - evaluate_point(init, b, true, test, train).error;
    row.acc_mid = 1.0 - evaluate_point(init, params::lerp(a, b, 0.5), true, test, train).error;
    row.gap = row.acc_mid - 0.5 * (row.acc_a + row.acc_b);
    if (!cfg.curve_lambdas.empty())
      row.curve = interpolate_two(init.with_params(a), init.with_params(b), cfg.curve_lambdas,
                                  test, train)
                      .curve;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<BnInitReport> bn_init_study(const Architecture& arch, const Dataset& train_set,
                                        const Dataset& test, std::span<const BnInit> kinds,
                                        const BnInitConfig& cfg) {
  if (arch.bn_count() == 0) throw ConfigError("bn_init_study needs an architecture with BN");
  std::vector<BnInitReport> out;
  for (BnInit kind : kinds) {
    BnInitReport r;
    r.init = kind;
    Model init = Model::initialize(arch.with_bn_init(kind), cfg.model_seed);
    r.init_weights = bn_weights(init.params());
    r.positive_init = params::positive_fraction(r.init_weights);
    auto trained = train(std::move(init), train_set, cfg.train);
    r.train_error = trained.log.empty() ? 1.0 : trained.log.back().train_error;
    const Model& m = trained.model;
    r.final_weights = bn_weights(m.params());
    r.positive_final = params::positive_fraction(r.final_weights);

    const NoiseVector eps = sample_common(CommonKind::Binary, m.arch().param_layout(), cfg.noise_seed);
    ScanConfig ns = cfg.scan;
    ns.normalization = Normalization::NS;
    r.ns_scan = scan_1d(m, eps, ns, test, train_set);
    ScanConfig fns = cfg.scan;
    fns.normalization = Normalization::FilterNS;
    r.filter_scan = scan_1d(m, eps, fns, test, train_set);
    r.ns_asymmetry = asymmetry_stats(r.ns_scan);
    r.filter_asymmetry = asymmetry_stats(r.filter_scan);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace asym
