#include "asym/fed.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "asym/errors.hpp"
#include "asym/rng.hpp"
#include "asym/stats.hpp"

namespace asym::fed {

namespace {

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

std::string to_string(Reduction r) { return r == Reduction::Mean ? "mean" : "sum"; }

Reduction parse_reduction(const std::string& name) {
  if (name == "mean") return Reduction::Mean;
  if (name == "sum") return Reduction::Sum;
  throw ConfigError("unknown reduction '" + name + "' (expected mean or sum)");
}

void FedConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must be in (0, 1]");
  if (e < 1) throw ConfigError("e must be >= 1");
  if (b < 1) throw ConfigError("b must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be >= 0");
  if (!(prox_mu >= 0.0) || !std::isfinite(prox_mu)) throw ConfigError("prox_mu must be >= 0");
  if (gamma > 0.0 && prox_mu > 0.0) throw ConfigError("gamma and prox_mu cannot both be nonzero");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be > 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (calibration_size < 1) throw ConfigError("calibration_size must be >= 1");
}

std::size_t FedConfig::clients_per_round() const {
  const auto m = static_cast<std::size_t>(std::floor(q * static_cast<double>(k) + 1e-9));
  return std::clamp<std::size_t>(m, 1, k);
}

std::vector<ClientShard> dirichlet_partition(std::span<const int> labels, std::size_t num_classes,
                                             std::size_t k, double alpha, std::uint64_t seed) {
  if (k < 1) throw ConfigError("dirichlet_partition: k must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("dirichlet_partition: alpha must be > 0");
  if (k > labels.size())
    throw ConfigError("dirichlet_partition: " + std::to_string(k) + " clients for " +
                      std::to_string(labels.size()) + " samples");
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw ShapeError("label out of range in dirichlet_partition");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }

  std::vector<std::vector<std::size_t>> shards(k);
  Rng rng = make_rng(seed, "dirichlet");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (auto& idx : by_class) {
    if (idx.empty()) continue;
    shuffle_in_place(idx, rng);
    std::vector<double> w(k);
    double total = 0.0;
    for (double& v : w) total += (v = gamma(rng));
    if (!(total > 0.0)) {
      // All draws underflowed: give the class to one client.
      std::fill(w.begin(), w.end(), 0.0);
      w[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
      total = 1.0;
    }
    const double n = static_cast<double>(idx.size());
    double cum = 0.0;
    std::size_t start = 0;
    for (std::size_t c = 0; c < k; ++c) {
      cum += w[c];
      const std::size_t end =
          c + 1 == k ? idx.size() : std::min(idx.size(), static_cast<std::size_t>(std::llround(cum / total * n)));
      for (std::size_t j = start; j < std::max(start, end); ++j) shards[c].push_back(idx[j]);
      start = std::max(start, end);
    }
  }

  for (std::size_t c = 0; c < k; ++c) {
    if (!shards[c].empty()) continue;
    auto largest = std::max_element(shards.begin(), shards.end(),
                                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    shards[c].push_back(largest->back());
    largest->pop_back();
  }

  std::vector<ClientShard> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    out[c].client = c;
    out[c].indices = std::move(shards[c]);
    std::sort(out[c].indices.begin(), out[c].indices.end());
  }
  return out;
}

double sign_anchor_reward(double anchor, double x) {
  return (anchor > 0.0 ? sigmoid(x) : 0.0) + (-anchor > 0.0 ? sigmoid(-x) : 0.0);
}

double sign_anchor_reward_grad(double anchor, double x) {
  const double s = sigmoid(x);
  const double ds = s * (1.0 - s);  // sigma'(x) == sigma'(-x)
  return (anchor > 0.0 ? ds : 0.0) - (-anchor > 0.0 ? ds : 0.0);
}

void add_regularizer_gradient(const ParamVector& anchor, const ParamVector& params,
                              ParamVector& gradient, double gamma, double prox_mu,
                              Reduction reduction) {
  require_same_layout(anchor, params, "fed regularizer");
  require_same_layout(params, gradient, "fed regularizer");
  const std::size_t n = params.size();
  if (gamma > 0.0) {
    const double c = reduction == Reduction::Mean ? gamma / static_cast<double>(n) : gamma;
    for (std::size_t i = 0; i < n; ++i) gradient[i] -= c * sign_anchor_reward_grad(anchor[i], params[i]);
  }
  if (prox_mu > 0.0)
    for (std::size_t i = 0; i < n; ++i) gradient[i] += prox_mu * (params[i] - anchor[i]);
}

ClientResult client_update(std::size_t client, const Model& global, const Dataset& shard,
                           const FedConfig& cfg, std::uint64_t round_seed) {
  if (shard.empty()) throw ConfigError("client " + std::to_string(client) + " has an empty shard");
  TrainConfig tc;
  tc.lr = cfg.lr;
  tc.momentum = cfg.momentum;
  tc.weight_decay = cfg.weight_decay;
  tc.batch_size = cfg.b;
  tc.epochs = cfg.e;
  tc.schedule = LrSchedule::Constant;
  tc.seed = round_seed;

  TrainHooks hooks;
  const ParamVector anchor = global.params();
  hooks.extra_gradient = [&anchor, &cfg](const ParamVector& p, ParamVector& g) {
    add_regularizer_gradient(anchor, p, g, cfg.gamma, cfg.prox_mu, cfg.reduction);
  };
  auto res = train(global, shard, tc, hooks);
  ClientResult out{client, std::move(res.model), 0.0};
  out.final_loss = res.log.empty() ? std::numeric_limits<double>::quiet_NaN() : res.log.back().train_loss;
  return out;
}

ParamVector aggregate(std::vector<std::pair<std::size_t, ParamVector>> client_params) {
  if (client_params.empty()) throw ConfigError("aggregate: no client parameters");
  std::sort(client_params.begin(), client_params.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const ParamVector& first = client_params.front().second;
  const double m = static_cast<double>(client_params.size());
  std::vector<double> acc(first.size(), 0.0);
  for (std::size_t j = 1; j < client_params.size(); ++j) {
    const ParamVector& p = client_params[j].second;
    require_same_layout(first, p, "aggregate");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (p[i] - first[i]) / m;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += first[i];
  return first.with_values(std::move(acc));
}

FedRun server_loop(const FedConfig& cfg, const Architecture& arch, const Dataset& train,
                   const Dataset& test) {
  return server_loop(cfg, Model::initialize(arch, derive_seed(cfg.seed, "fed-init")), train, test);
}

FedRun server_loop(const FedConfig& cfg, Model global, const Dataset& train, const Dataset& test) {
  cfg.validate();
  train.validate();
  FedRun run{std::move(global), {}, dirichlet_partition(train.labels, train.num_classes, cfg.k,
                                                        cfg.alpha, cfg.seed)};
  std::vector<Dataset> shards;
  shards.reserve(run.shards.size());
  for (const auto& s : run.shards) shards.push_back(train.subset(s.indices));

  Rng calib_rng = make_rng(cfg.seed, "fed-calibration");
  auto calib_idx = sample_without_replacement(train.size(), cfg.calibration_size, calib_rng);
  std::sort(calib_idx.begin(), calib_idx.end());
  const Dataset calibration = train.subset(calib_idx);
  const std::size_t m = cfg.clients_per_round();

  for (std::size_t t = 1; t <= cfg.t; ++t) {
    Rng pick = make_rng(cfg.seed, "fed-select", t);
    auto selected = sample_without_replacement(cfg.k, m, pick);
    std::sort(selected.begin(), selected.end());
    const std::uint64_t round_seed = derive_seed(cfg.seed, "fed-local", t);

    std::vector<std::unique_ptr<ClientResult>> results(selected.size());
    std::vector<std::exception_ptr> errors(selected.size());
    const auto count = static_cast<std::int64_t>(selected.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t j = 0; j < count; ++j) {
      try {
        results[j] = std::make_unique<ClientResult>(
            client_update(selected[j], run.model, shards[selected[j]], cfg, round_seed));
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }

    RoundLog log;
    log.round = t;
    log.selected = selected;
    std::vector<std::pair<std::size_t, ParamVector>> returned;
    double ssr_sum = 0.0;
    for (std::size_t j = 0; j < selected.size(); ++j) {
      if (errors[j]) {
        try {
          std::rethrow_exception(errors[j]);
        } catch (const NumericError& e) {
          std::cerr << "warning: round " << t << " client " << selected[j]
                    << " diverged and was excluded: " << e.what() << '\n';
          log.diverged.push_back(selected[j]);
          log.client_losses.push_back(std::numeric_limits<double>::quiet_NaN());
          continue;
        }
      }
      log.client_losses.push_back(results[j]->final_loss);
      ssr_sum += params::sign_consistency_ratio(results[j]->model.params(), run.model.params()).overall;
      returned.emplace_back(selected[j], results[j]->model.params());
    }
    if (returned.empty())
      throw NumericError("round " + std::to_string(t) + ": every selected client diverged");
    log.mean_ssr = ssr_sum / static_cast<double>(returned.size());

    Model next = run.model.with_params(aggregate(std::move(returned)));
    run.model = bn_recompute(std::move(next), calibration);
    log.acc = 1.0 - evaluate(run.model, test).error;
    run.rounds.push_back(std::move(log));
  }
  return run;
}

std::vector<CompareRow> fed_compare(const CompareConfig& cfg, const Architecture& arch,
                                    const Dataset& train, const Dataset& test) {
  if (cfg.seeds.empty()) throw ConfigError("fed_compare needs at least one seed");
  std::vector<CompareRow> rows;
  for (double alpha : cfg.alphas) {
    for (const auto& method : cfg.methods) {
      CompareRow row{method.name, alpha, method.gamma, method.prox_mu, cfg.seeds, {}, {}, 0.0, 0.0};
      for (std::uint64_t seed : cfg.seeds) {
        FedConfig fc = cfg.base;
        fc.alpha = alpha;
        fc.gamma = method.gamma;
        fc.prox_mu = method.prox_mu;
        fc.seed = seed;
        const FedRun run = server_loop(fc, arch, train, test);
        std::vector<double> traj;
        for (const auto& r : run.rounds) traj.push_back(r.mean_ssr);
        row.accuracies.push_back(run.rounds.empty() ? 1.0 - evaluate(run.model, test).error
                                                    : run.rounds.back().acc);
        row.ssr_trajectories.push_back(std::move(traj));
      }
      row.acc_mean = stats::mean(row.accuracies);
      row.acc_std = row.accuracies.size() > 1 ? stats::stddev(row.accuracies) : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace asym::fed
