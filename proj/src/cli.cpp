#include "asym/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "asym/checkpoint.hpp"
#include "asym/datasets.hpp"
#include "asym/errors.hpp"
#include "asym/fed.hpp"
#include "asym/nn.hpp"
#include "asym/noise.hpp"
#include "asym/probes.hpp"
#include "asym/rng.hpp"
#include "asym/report.hpp"
#include "asym/scan.hpp"

namespace asym {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string out = "out";
  std::string dataset = "digits";
  std::uint64_t seed = 0;
  std::string config;
};

template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
  return app->add_option(name, var, desc)->capture_default_str();
}

void add_common(CLI::App* app, Common& c) {
  opt(app, "--out", c.out, "Output directory");
  opt(app, "--dataset", c.dataset, "digits | blobs[:C:N:D] | cifar10:DIR[:N]");
  opt(app, "--seed", c.seed, "Seed for the data split and training order");
  app->add_option("--config", c.config, "Flat key = value config file; flags override it");
}

std::string option_value(const CLI::Option* o) {
  if (o->count() == 0) return o->get_default_str();
  std::string s;
  for (const auto& r : o->results()) s += (s.empty() ? "" : ",") + r;
  return s;
}

// Resolved options of a subcommand, keyed by long flag name.
json resolved_config(const CLI::App* app) {
  json cfg = json::object();
  for (const CLI::Option* o : app->get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string& name = o->get_lnames().front();
    if (name == "help" || name == "config") continue;
    cfg[name] = option_value(o);
  }
  return cfg;
}

std::string config_text(const json& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg.items()) {
    const std::string value = v.get<std::string>();
    s += k + " = \"" + value + "\"\n";
  }
  return s;
}

void finish(const std::string& command, const CLI::App* app, const fs::path& out,
            std::vector<std::string> artifacts, std::ostream& os) {
  const json cfg = resolved_config(app);
  report::write_text(out / "config.toml", config_text(cfg));
  artifacts.push_back("config.toml");
  report::write_manifest(out, report::make_manifest(command, cfg, out, artifacts));
  os << "wrote " << (out / "manifest.json").string() << '\n';
}

LrSchedule parse_schedule(const std::string& s) {
  if (s == "cosine") return LrSchedule::CosineAnneal;
  if (s == "constant") return LrSchedule::Constant;
  throw ConfigError("unknown schedule '" + s + "' (expected cosine or constant)");
}

struct TrainFlags {
  double lr = 0.03;
  double momentum = 0.9;
  double wd = 5e-4;
  std::size_t batch = 64;
  std::size_t epochs = 30;
  std::string schedule = "cosine";

  void add(CLI::App* app) {
    opt(app, "--lr", lr, "Learning rate");
    opt(app, "--momentum", momentum, "SGD momentum");
    opt(app, "--wd", wd, "Weight decay");
    opt(app, "--batch", batch, "Mini-batch size");
    opt(app, "--epochs", epochs, "Training epochs");
    opt(app, "--schedule", schedule, "cosine | constant");
  }
  TrainConfig config(std::uint64_t seed) const {
    TrainConfig tc;
    tc.lr = lr;
    tc.momentum = momentum;
    tc.weight_decay = wd;
    tc.batch_size = batch;
    tc.epochs = epochs;
    tc.schedule = parse_schedule(schedule);
    tc.seed = seed;
    tc.validate();
    return tc;
  }
};

json asymmetry_json(const Asymmetry& a) {
  return {{"pos_mean", a.pos_mean}, {"neg_mean", a.neg_mean}, {"gap", a.gap}};
}

json ssr_json(const SignConsistency& s) {
  json j = {{"overall", s.overall}};
  for (const auto& [k, v] : s.per_group) j["per_group"][k] = v;
  return j;
}

report::Curve error_curve(const std::string& label, const ScanResult& r) {
  report::Curve c{label, {}, {}};
  for (const auto& p : r.points) {
    c.x.push_back(p.lambda);
    c.y.push_back(p.error);
  }
  return c;
}

// Merges `key = value` lines from --config into the arguments, skipping keys
// already given as flags. Unknown keys surface later as unknown flags.
std::vector<std::string> inject_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(f);
  } catch (const CLI::ParseError& e) {
    throw ConfigError("malformed config file " + path + ": " + e.what());
  }
  std::vector<std::string> out = args;
  for (const auto& item : items) {
    if (item.inputs.empty() && item.name.empty()) continue;
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    out.push_back(flag + "=" + value);
  }
  return out;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app("Asymmetric valley laboratory", "asym");
  app.require_subcommand(1);
  std::function<void()> run;
  std::string command;

  // train
  Common train_c;
  TrainFlags train_f;
  std::string train_arch = "mlp-bn";
  std::uint64_t init_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a model and save a checkpoint");
  add_common(train_cmd, train_c);
  train_f.add(train_cmd);
  opt(train_cmd, "--arch", train_arch, "Architecture text or preset");
  opt(train_cmd, "--init-seed", init_seed, "Seed for parameter initialization");
  train_cmd->callback([&] {
    command = "train";
    run = [&] {
      const fs::path dir = train_c.out;
      const auto split = load_dataset(train_c.dataset, train_c.seed);
      const auto arch = Architecture::parse(train_arch);
      auto res = asym::train(Model::initialize(arch, init_seed), split.train, train_f.config(train_c.seed));
      save_checkpoint(res.model, (dir / "model.ckpt").string());
      std::string log = "epoch,lr,train_loss,train_error\n";
      for (const auto& e : res.log)
        log += std::to_string(e.epoch) + "," + report::format_double(e.lr) + "," +
               report::format_double(e.train_loss) + "," + report::format_double(e.train_error) + "\n";
      report::write_text(dir / "train_log.csv", log);
      const auto ev_train = evaluate(res.model, split.train);
      const auto ev_test = evaluate(res.model, split.test);
      const json metrics = {{"train_error", ev_train.error}, {"test_error", ev_test.error},
                            {"train_ce", ev_train.ce},       {"test_ce", ev_test.ce},
                            {"checkpoint_id", checkpoint_id(res.model)}};
      report::write_text(dir / "metrics.json", metrics.dump(2) + "\n");
      out << "train error " << ev_train.error << ", test error " << ev_test.error << '\n';
      finish("train", train_cmd, dir, {"model.ckpt", "train_log.csv", "metrics.json"}, out);
    };
  });

  // scan
  Common scan_c;
  std::string scan_ckpt, noise_name = "g01", transform_name = "none", norm_name = "ns";
  double scan_s = 1.0, ratio = 0.0;
  std::uint64_t noise_seed = 0;
  std::size_t scan_points = 41;
  bool no_recompute = false;
  auto* scan_cmd = app.add_subcommand("scan", "1D loss scan around a checkpoint");
  add_common(scan_cmd, scan_c);
  scan_cmd->add_option("--checkpoint", scan_ckpt, "Checkpoint to scan")->required();
  opt(scan_cmd, "--noise", noise_name, "g01 | u-11 | ternary | g11 | u01 | binary | ones | init | theta | sign | sign-centered | sgp | sgp-centered");
  opt(scan_cmd, "--transform", transform_name, "none | sign-replace | sign-ratio");
  opt(scan_cmd, "--ratio", ratio, "Sign-agreement ratio for sign-ratio");
  opt(scan_cmd, "--noise-seed", noise_seed, "Noise seed");
  opt(scan_cmd, "--s", scan_s, "Scale of the normalized direction");
  opt(scan_cmd, "--normalization", norm_name, "ns | filter-ns | raw");
  opt(scan_cmd, "--points", scan_points, "Grid points over [-1, 1]");
  scan_cmd->add_flag("--no-bn-recompute", no_recompute, "Keep the stored BN statistics");
  scan_cmd->callback([&] {
    command = "scan";
    run = [&] {
      const fs::path dir = scan_c.out;
      const Model model = load_checkpoint(scan_ckpt);
      const auto split = load_dataset(scan_c.dataset, scan_c.seed);
      NoiseSpec spec;
      spec.kind = parse_noise_kind(noise_name);
      spec.transform = parse_noise_transform(transform_name);
      spec.ratio = ratio;
      spec.seed = noise_seed;
      spec.validate();
      ScanConfig cfg;
      cfg.lambdas = uniform_grid(-1.0, 1.0, scan_points);
      cfg.s = scan_s;
      cfg.normalization = parse_normalization(norm_name);
      cfg.bn_recompute = !no_recompute;
      cfg.validate();
      const auto result = scan_1d(model, realize(spec, model), cfg, split.test, split.train);
      report::write_text(dir / "scan.csv", report::scan_csv(result));
      const json side = {{"noise", describe(spec)},
                         {"checkpoint_id", result.checkpoint_id},
                         {"normalization", to_string(cfg.normalization)},
                         {"s", cfg.s},
                         {"bn_recompute", cfg.bn_recompute},
                         {"error", asymmetry_json(asymmetry_stats(result, Metric::Error))},
                         {"ce", asymmetry_json(asymmetry_stats(result, Metric::CE))}};
      report::write_text(dir / "scan.json", side.dump(2) + "\n");
      report::write_text(dir / "scan.svg",
                         report::render_svg({error_curve(describe(spec), result)},
                                            {"1D scan", "lambda", "test error"}));
      finish("scan", scan_cmd, dir, {"scan.csv", "scan.json", "scan.svg"}, out);
    };
  });

  // interpolate
  Common interp_c;
  std::string first_ckpt, second_ckpt;
  double interp_lo = -1.0, interp_hi = 2.0;
  std::size_t interp_points = 13;
  auto* interp_cmd = app.add_subcommand("interpolate", "Linear interpolation between two checkpoints");
  add_common(interp_cmd, interp_c);
  interp_cmd->add_option("--first", first_ckpt, "Checkpoint at lambda 0")->required();
  interp_cmd->add_option("--second", second_ckpt, "Checkpoint at lambda 1")->required();
  opt(interp_cmd, "--lo", interp_lo, "Grid start");
  opt(interp_cmd, "--hi", interp_hi, "Grid end");
  opt(interp_cmd, "--points", interp_points, "Grid points");
  interp_cmd->callback([&] {
    command = "interpolate";
    run = [&] {
      const fs::path dir = interp_c.out;
      const auto split = load_dataset(interp_c.dataset, interp_c.seed);
      const auto res = interpolate_two(load_checkpoint(first_ckpt), load_checkpoint(second_ckpt),
                                       uniform_grid(interp_lo, interp_hi, interp_points), split.test,
                                       split.train);
      report::write_text(dir / "interp.csv", report::scan_csv(res.curve));
      const json side = {{"ssr_first", ssr_json(res.ssr_first)}, {"ssr_second", ssr_json(res.ssr_second)}};
      report::write_text(dir / "interp.json", side.dump(2) + "\n");
      report::write_text(dir / "interp.svg", report::render_svg({error_curve("interpolation", res.curve)},
                                                                {"Interpolation", "lambda", "test error"}));
      finish("interpolate", interp_cmd, dir, {"interp.csv", "interp.json", "interp.svg"}, out);
    };
  });

  // soup
  Common soup_c;
  TrainFlags soup_f;
  soup_f.lr = 0.01;
  soup_f.epochs = 50;
  std::string soup_arch = "mlp-bn";
  std::size_t pretrain_epochs = 30;
  std::vector<std::size_t> soup_checkpoints = {1, 2, 3, 5, 10, 20, 30, 50};
  bool soup_curves = false;
  auto* soup_cmd = app.add_subcommand("soup", "Two-halves fine-tuning with SSR and midpoint gap");
  add_common(soup_cmd, soup_c);
  soup_f.add(soup_cmd);
  opt(soup_cmd, "--arch", soup_arch, "Architecture text or preset");
  opt(soup_cmd, "--init-seed", init_seed, "Seed for parameter initialization");
  opt(soup_cmd, "--pretrain-epochs", pretrain_epochs, "Epochs on the full train set before splitting; 0 starts from scratch");
  opt(soup_cmd, "--checkpoints", soup_checkpoints, "Epochs at which to compare A and B")->delimiter(',');
  soup_cmd->add_flag("--curves", soup_curves, "Also emit the interpolation curve per checkpoint");
  soup_cmd->callback([&] {
    command = "soup";
    run = [&] {
      const fs::path dir = soup_c.out;
      const auto split = load_dataset(soup_c.dataset, soup_c.seed);
      Model init = Model::initialize(Architecture::parse(soup_arch), init_seed);
      if (pretrain_epochs > 0) {
        TrainFlags pre = soup_f;
        pre.epochs = pretrain_epochs;
        pre.lr = 0.03;
        init = asym::train(std::move(init), split.train, pre.config(derive_seed(soup_c.seed, "pretrain"))).model;
      }
      SoupConfig cfg;
      cfg.checkpoints = soup_checkpoints;
      cfg.train = soup_f.config(soup_c.seed);
      cfg.train.epochs = *std::max_element(soup_checkpoints.begin(), soup_checkpoints.end());
      cfg.split_seed = soup_c.seed;
      if (!soup_curves) cfg.curve_lambdas.clear();
      const auto rep = soup_experiment(init, split.train, split.test, cfg);
      report::write_text(dir / "soup.csv", report::soup_csv(rep));
      std::vector<std::string> artifacts = {"soup.csv"};
      if (soup_curves) {
        std::vector<report::Curve> curves;
        for (const auto& row : rep.rows) curves.push_back(error_curve("epoch " + std::to_string(row.epoch), row.curve));
        report::write_text(dir / "soup.svg", report::render_svg(curves, {"A to B", "lambda", "test error"}));
        artifacts.push_back("soup.svg");
      }
      finish("soup", soup_cmd, dir, artifacts, out);
    };
  });

  // fed
  Common fed_c;
  fed::FedConfig fc;
  std::string fed_arch = "mlp-bn", reduction = "mean";
  bool compare = false;
  std::vector<double> compare_gammas = {0.001, 0.01, 0.1};
  std::vector<double> compare_alphas;
  std::vector<std::uint64_t> compare_seeds = {0, 1, 2};
  std::uint64_t fed_split_seed = 0;
  auto* fed_cmd = app.add_subcommand("fed", "Federated training with FedAvg / FedSign / proximal term");
  add_common(fed_cmd, fed_c);
  opt(fed_cmd, "--split-seed", fed_split_seed, "Seed of the train/test split");
  opt(fed_cmd, "--arch", fed_arch, "Architecture text or preset");
  opt(fed_cmd, "--k", fc.k, "Clients");
  opt(fed_cmd, "--q", fc.q, "Participation fraction");
  opt(fed_cmd, "--t", fc.t, "Rounds");
  opt(fed_cmd, "--e", fc.e, "Local epochs");
  opt(fed_cmd, "--b", fc.b, "Local batch size");
  opt(fed_cmd, "--gamma", fc.gamma, "Sign-anchor reward coefficient");
  opt(fed_cmd, "--prox-mu", fc.prox_mu, "Proximal coefficient");
  opt(fed_cmd, "--alpha", fc.alpha, "Dirichlet concentration");
  opt(fed_cmd, "--reduction", reduction, "mean | sum");
  opt(fed_cmd, "--local-lr", fc.lr, "Client learning rate");
  opt(fed_cmd, "--local-momentum", fc.momentum, "Client momentum");
  opt(fed_cmd, "--local-wd", fc.weight_decay, "Client weight decay");
  opt(fed_cmd, "--calibration", fc.calibration_size, "Server-held samples for BN recompute");
  fed_cmd->add_flag("--compare", compare, "Run FedAvg vs FedSign over --gammas and --seeds");
  opt(fed_cmd, "--gammas", compare_gammas, "FedSign coefficients for --compare")->delimiter(',');
  opt(fed_cmd, "--alphas", compare_alphas, "Dirichlet alphas for --compare (default: --alpha)")->delimiter(',');
  opt(fed_cmd, "--seeds", compare_seeds, "Seeds for --compare")->delimiter(',');
  fed_cmd->callback([&] {
    command = "fed";
    run = [&] {
      const fs::path dir = fed_c.out;
      const auto split = load_dataset(fed_c.dataset, fed_split_seed);
      const auto arch = Architecture::parse(fed_arch);
      fc.seed = fed_c.seed;
      fc.reduction = fed::parse_reduction(reduction);
      fc.validate();
      if (compare) {
        fed::CompareConfig cc;
        cc.base = fc;
        cc.alphas = compare_alphas.empty() ? std::vector<double>{fc.alpha} : compare_alphas;
        cc.seeds = compare_seeds;
        cc.methods = {{"fedavg", 0.0, 0.0}};
        for (double g : compare_gammas) cc.methods.push_back({"fedsign", g, 0.0});
        if (fc.prox_mu > 0.0) cc.methods.push_back({"prox", 0.0, fc.prox_mu});
        cc.base.prox_mu = 0.0;
        cc.base.gamma = 0.0;
        const auto rows = fed::fed_compare(cc, arch, split.train, split.test);
        report::write_text(dir / "compare.csv", report::compare_csv(rows));
        std::string traj = "method,alpha,gamma,prox_mu,seed,round,mean_ssr\n";
        for (const auto& r : rows)
          for (std::size_t s = 0; s < r.seeds.size(); ++s)
            for (std::size_t t = 0; t < r.ssr_trajectories[s].size(); ++t)
              traj += r.method + "," + report::format_double(r.alpha) + "," + report::format_double(r.gamma) +
                      "," + report::format_double(r.prox_mu) + "," + std::to_string(r.seeds[s]) + "," +
                      std::to_string(t + 1) + "," + report::format_double(r.ssr_trajectories[s][t]) + "\n";
        report::write_text(dir / "ssr_trajectories.csv", traj);
        finish("fed", fed_cmd, dir, {"compare.csv", "ssr_trajectories.csv"}, out);
        return;
      }
      const auto run_result = fed::server_loop(fc, arch, split.train, split.test);
      report::write_text(dir / "rounds.csv", report::rounds_csv(run_result.rounds));
      save_checkpoint(run_result.model, (dir / "final.ckpt").string());
      if (!run_result.rounds.empty()) out << "final accuracy " << run_result.rounds.back().acc << '\n';
      finish("fed", fed_cmd, dir, {"rounds.csv", "final.ckpt"}, out);
    };
  });

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Theory probes");
  probe_cmd->require_subcommand(1);

  Common relu_c;
  probes::ReluSimConfig relu_cfg;
  auto* relu_cmd = probe_cmd->add_subcommand("relu", "Distribution of (w + lambda sign(w))^T h");
  add_common(relu_cmd, relu_c);
  opt(relu_cmd, "--a", relu_cfg.a, "Correlation of w with h");
  opt(relu_cmd, "--n", relu_cfg.trials, "Monte Carlo trials");
  opt(relu_cmd, "--d", relu_cfg.dims, "Dimension");
  opt(relu_cmd, "--bins", relu_cfg.bins, "Histogram bins");
  opt(relu_cmd, "--lambdas", relu_cfg.lambdas, "Lambda values")->delimiter(',');
  relu_cmd->callback([&] {
    command = "probe relu";
    run = [&] {
      const fs::path dir = relu_c.out;
      const auto res = probes::relu_sim(relu_cfg, relu_c.seed);
      std::vector<std::string> artifacts = {"relu_summary.csv", "relu.json"};
      report::write_text(dir / "relu_summary.csv", report::relu_summary_csv(res));
      for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const std::string name = "relu_hist_" + std::to_string(i) + ".csv";
        report::write_text(dir / name, report::relu_histogram_csv(res, i));
        artifacts.push_back(name);
      }
      json side = {{"h_norm_sq", res.h_norm_sq}, {"sign_term_mean", res.sign_term_mean}};
      for (std::size_t i = 0; i < res.rows.size(); ++i)
        side["histograms"].push_back({{"lambda", res.rows[i].lambda}, {"file", "relu_hist_" + std::to_string(i) + ".csv"}});
      report::write_text(dir / "relu.json", side.dump(2) + "\n");
      finish("probe relu", relu_cmd, dir, artifacts, out);
    };
  });

  Common sm_c;
  probes::ProbeTrainConfig sm_train;
  std::string sm_mode = "sign";
  double sm_lo = -1.0, sm_hi = 1.0;
  std::size_t sm_points = 21;
  std::uint64_t sm_noise_seed = 0;
  auto* sm_cmd = probe_cmd->add_subcommand("softmax", "Softmax trace and Taylor metrics of a linear probe");
  add_common(sm_cmd, sm_c);
  opt(sm_cmd, "--l2", sm_train.l2, "L2 coefficient of the probe");
  opt(sm_cmd, "--lr", sm_train.lr, "Probe learning rate");
  opt(sm_cmd, "--iterations", sm_train.iterations, "Full-batch iterations");
  opt(sm_cmd, "--mode", sm_mode, "sign | raw");
  opt(sm_cmd, "--noise-seed", sm_noise_seed, "Noise seed");
  opt(sm_cmd, "--lo", sm_lo, "Grid start");
  opt(sm_cmd, "--hi", sm_hi, "Grid end");
  opt(sm_cmd, "--points", sm_points, "Grid points");
  sm_cmd->callback([&] {
    command = "probe softmax";
    run = [&] {
      if (sm_mode != "sign" && sm_mode != "raw") throw ConfigError("--mode must be sign or raw");
      const fs::path dir = sm_c.out;
      const auto split = load_dataset(sm_c.dataset, sm_c.seed);
      const auto probe = probes::train_linear_probe(split.train, sm_train);
      const auto test_probe = probes::with_features(probe, split.test, sm_train.bias_feature);
      const auto rows = probes::softmax_metrics(test_probe, probes::probe_noise(probe, sm_noise_seed),
                                                uniform_grid(sm_lo, sm_hi, sm_points), sm_mode == "sign");
      report::write_text(dir / "softmax_metrics.csv", report::softmax_metrics_csv(rows));
      finish("probe softmax", sm_cmd, dir, {"softmax_metrics.csv"}, out);
    };
  });

  Common conf_c;
  std::string conf_ckpt, conf_layer = "relu0";
  std::vector<double> conf_amplitudes = {0.2, 0.4, 0.6, 0.8, 1.0};
  std::uint64_t conf_noise_seed = 0;
  auto* conf_cmd = probe_cmd->add_subcommand("confusion", "ReLU activation agreement under sign-consistent noise");
  add_common(conf_cmd, conf_c);
  conf_cmd->add_option("--checkpoint", conf_ckpt, "Trained model")->required();
  opt(conf_cmd, "--layer", conf_layer, "ReLU layer name");
  opt(conf_cmd, "--amplitudes", conf_amplitudes, "Each amplitude a is probed at +a and -a")->delimiter(',');
  opt(conf_cmd, "--noise-seed", conf_noise_seed, "Noise seed");
  conf_cmd->callback([&] {
    command = "probe confusion";
    run = [&] {
      const fs::path dir = conf_c.out;
      const Model model = load_checkpoint(conf_ckpt);
      const auto split = load_dataset(conf_c.dataset, conf_c.seed);
      NoiseSpec spec;
      spec.transform = NoiseTransform::SignReplace;
      spec.seed = conf_noise_seed;
      const auto noise = realize(spec, model);
      const auto dir_vec = scan_direction(noise.values, model.params(), Normalization::NS, 1.0);
      std::vector<double> lambdas;
      for (double a : conf_amplitudes) {
        lambdas.push_back(-a);
        lambdas.push_back(a);
      }
      const auto rows = probes::confusion_sweep(model, dir_vec, lambdas, split.test, split.train, conf_layer);
      report::write_text(dir / "confusion.csv", report::confusion_csv(rows));
      finish("probe confusion", conf_cmd, dir, {"confusion.csv"}, out);
    };
  });

  Common grad_c;
  std::string grad_ckpt;
  auto* grad_cmd = probe_cmd->add_subcommand("gradient", "Cosine between sign(theta) and the full-data gradient");
  add_common(grad_cmd, grad_c);
  grad_cmd->add_option("--checkpoint", grad_ckpt, "Trained model")->required();
  grad_cmd->callback([&] {
    command = "probe gradient";
    run = [&] {
      const fs::path dir = grad_c.out;
      const auto split = load_dataset(grad_c.dataset, grad_c.seed);
      const auto g = probes::gradient_orthogonality(load_checkpoint(grad_ckpt), split.train);
      const json side = {{"cosine", g.cosine}, {"zero_gradient", g.zero_gradient}};
      report::write_text(dir / "gradient.json", side.dump(2) + "\n");
      out << "cosine " << g.cosine << '\n';
      finish("probe gradient", grad_cmd, dir, {"gradient.json"}, out);
    };
  });

  Common pat_c;
  std::size_t pat_class = 0;
  std::vector<double> pat_lambdas = {-1.0, -0.5, 0.0, 0.5, 1.0};
  auto* pat_cmd = probe_cmd->add_subcommand("pattern", "w + lambda sign(w) for one class row of the digits probe");
  add_common(pat_cmd, pat_c);
  opt(pat_cmd, "--class", pat_class, "Class row of the linear probe");
  opt(pat_cmd, "--lambdas", pat_lambdas, "Lambda values")->delimiter(',');
  pat_cmd->callback([&] {
    command = "probe pattern";
    run = [&] {
      const fs::path dir = pat_c.out;
      const auto split = load_dataset(pat_c.dataset, pat_c.seed);
      probes::ProbeTrainConfig pc;
      pc.bias_feature = false;
      const auto probe = probes::train_linear_probe(split.train, pc);
      if (pat_class >= probe.classes()) throw ConfigError("--class out of range");
      const std::size_t d = probe.dims();
      const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d))));
      if (side * side != d) throw ConfigError("pattern needs square feature images");
      const auto sweep = probes::weight_pattern_sweep(
          probe.weights.values().subspan(pat_class * d, d), pat_lambdas);
      report::write_text(dir / "pattern.pgm", report::render_pgm(sweep, side));
      std::string csv = "lambda,index,value\n";
      for (std::size_t i = 0; i < sweep.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
          csv += report::format_double(pat_lambdas[i]) + "," + std::to_string(j) + "," +
                 report::format_double(sweep[i][j]) + "\n";
      report::write_text(dir / "pattern.csv", csv);
      finish("probe pattern", pat_cmd, dir, {"pattern.pgm", "pattern.csv"}, out);
    };
  });

  auto usage = [&](std::ostream& os) {
    const CLI::App* shown = &app;
    while (!shown->get_subcommands().empty()) shown = shown->get_subcommands().front();
    os << shown->help();
  };

  try {
    std::vector<std::string> args = inject_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    usage(out);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    usage(err);
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    run();
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << command << " failed: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace asym
