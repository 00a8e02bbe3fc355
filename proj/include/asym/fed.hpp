#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asym/architecture.hpp"
#include "asym/dataset.hpp"
#include "asym/model.hpp"
#include "asym/nn.hpp"

namespace asym::fed {

// How the per-coordinate sign-anchor reward is reduced to a scalar.
enum class Reduction { Mean, Sum };
std::string to_string(Reduction r);
Reduction parse_reduction(const std::string& name);

struct FedConfig {
  std::size_t k = 10;      // clients
  double q = 1.0;          // participation fraction in (0, 1]
  std::size_t t = 30;      // rounds
  std::size_t e = 2;       // local epochs
  std::size_t b = 64;      // local batch size
  double gamma = 0.0;      // sign-anchor reward coefficient
  double prox_mu = 0.0;    // proximal coefficient
  double alpha = 0.5;      // Dirichlet concentration
  std::uint64_t seed = 0;
  Reduction reduction = Reduction::Mean;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t calibration_size = 512;  // server-held samples for BN recompute

  void validate() const;
  // max(floor(q * k), 1)
  std::size_t clients_per_round() const;
};

struct ClientShard {
  std::size_t client = 0;
  std::vector<std::size_t> indices;  // ascending
};

// Per class, Dirichlet(alpha) proportions split that class's (shuffled)
// samples across clients. Empty shards take one sample from the largest.
std::vector<ClientShard> dirichlet_partition(std::span<const int> labels, std::size_t num_classes,
                                             std::size_t k, double alpha, std::uint64_t seed);

// Per coordinate: sgp(anchor) sigma(x) + sgp(-anchor) sigma(-x).
double sign_anchor_reward(double anchor, double x);
// d/dx of the above.
double sign_anchor_reward_grad(double anchor, double x);

// Adds the gradient of -gamma * reward and of mu/2 ||theta - anchor||^2 to `gradient`.
void add_regularizer_gradient(const ParamVector& anchor, const ParamVector& params,
                              ParamVector& gradient, double gamma, double prox_mu,
                              Reduction reduction);

struct ClientResult {
  std::size_t client = 0;
  Model model;
  double final_loss = 0.0;
};

// Starts from `global` and runs cfg.e epochs of local SGD on the shard.
ClientResult client_update(std::size_t client, const Model& global, const Dataset& shard,
                           const FedConfig& cfg, std::uint64_t round_seed);

// Unweighted mean of the parameter vectors, summed in ascending client order
// and anchored at the first one, so identical inputs average to themselves.
ParamVector aggregate(std::vector<std::pair<std::size_t, ParamVector>> client_params);

struct RoundLog {
  std::size_t round = 0;  // 1-based
  std::vector<std::size_t> selected;
  std::vector<double> client_losses;   // per selected client, NaN if diverged
  std::vector<std::size_t> diverged;
  double acc = 0.0;
  double mean_ssr = 0.0;  // mean SSR(client result, global) over returned clients
};

struct FedRun {
  Model model;
  std::vector<RoundLog> rounds;
  std::vector<ClientShard> shards;
};

// Seeds: initial model derive_seed(seed, "fed-init"); shards
// dirichlet_partition(..., seed); calibration subset sampled by
// make_rng(seed, "fed-calibration"); round t selects clients with
// make_rng(seed, "fed-select", t) and every client shuffles with
// derive_seed(seed, "fed-local", t). Local SGD uses a constant learning rate.
FedRun server_loop(const FedConfig& cfg, const Architecture& arch, const Dataset& train,
                   const Dataset& test);
// Same, starting from a given global model.
FedRun server_loop(const FedConfig& cfg, Model global, const Dataset& train, const Dataset& test);

struct FedMethod {
  std::string name;  // e.g. "fedavg", "fedsign"
  double gamma = 0.0;
  double prox_mu = 0.0;
};

struct CompareRow {
  std::string method;
  double alpha = 0.0;
  double gamma = 0.0;
  double prox_mu = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies;  // final accuracy per seed
  std::vector<std::vector<double>> ssr_trajectories;  // per seed, per round
  double acc_mean = 0.0;
  double acc_std = 0.0;  // sample std, 0 for one seed
};

struct CompareConfig {
  FedConfig base;
  std::vector<double> alphas = {0.5};
  std::vector<FedMethod> methods = {{"fedavg", 0.0, 0.0}, {"fedsign", 0.01, 0.0}};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
};

std::vector<CompareRow> fed_compare(const CompareConfig& cfg, const Architecture& arch,
                                    const Dataset& train, const Dataset& test);

}  // namespace asym::fed
