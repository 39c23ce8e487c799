#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vplan/harness.hpp"
#include "vplan/planner.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string run_dir;
  std::string preset;
  std::string conditions;
  std::string noise;
  std::vector<std::string> overrides;
  long long seed = -1;
  long long seeds = -1;
  long long epochs = -1;
  bool serial = false;
};

void add_common(CLI::App* sub, Options& o, bool needs_out) {
  sub->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
  auto* out = sub->add_option("--out", o.out, "Run directory");
  if (needs_out) out->required();
  sub->add_option("--seed", o.seed, "Base seed");
  sub->add_option("--seeds", o.seeds, "Number of seeds");
  sub->add_option("--preset", o.preset, "Corpus preset (crosstask, coin, deterministic, tiny)");
  sub->add_option("--conditions", o.conditions, "Comma-separated conditions");
  sub->add_option("--noise", o.noise, "Segmentation error rate for eval; comma-separated grid for sweep-noise");
  sub->add_option("--epochs", o.epochs, "Training epochs");
  sub->add_option("--set", o.overrides, "Config override key=value (repeatable)");
  sub->add_flag("--serial", o.serial, "Disable OpenMP parallel paths");
}

vplan::RunConfig build_config(const Options& o, const std::string& command) {
  vplan::RunConfig cfg;
  if (!o.config.empty()) vplan::load_config_file(cfg, o.config);
  if (!o.preset.empty()) cfg.set("corpus.preset", o.preset);
  for (const auto& kv : o.overrides)
    if (kv.rfind("corpus.preset=", 0) == 0) cfg.set("corpus.preset", kv.substr(14));
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw vplan::ConfigError("--set expects key=value, got '" + kv + "'");
    if (kv.substr(0, eq) == "corpus.preset") continue;
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.out.empty()) cfg.out = o.out;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.seeds >= 0) cfg.set("seeds", std::to_string(o.seeds));
  if (o.epochs >= 0) cfg.set("train.epochs", std::to_string(o.epochs));
  if (!o.conditions.empty()) cfg.set("eval.conditions", o.conditions);
  if (!o.noise.empty()) cfg.set(command == "sweep-noise" ? "sweep.noise_grid" : "eval.noise", o.noise);
  if (o.serial) cfg.parallel = false;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-conditioned plan forecasting from instructional video histories"};
  app.require_subcommand(1);
  Options o;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus under <out>/corpus");
  auto* trn = app.add_subcommand("train", "Train the neural conditions");
  auto* evl = app.add_subcommand("eval", "Evaluate conditions on the test split");
  auto* swp = app.add_subcommand("sweep-noise", "Observation gap across segmentation error rates");
  auto* abl = app.add_subcommand("ablate", "Input-condition ablation");
  auto* rep = app.add_subcommand("report", "Render <run>/report/report.md from existing outputs");
  for (auto* s : {gen, trn, evl, swp, abl}) add_common(s, o, true);
  rep->add_option("run", o.run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (rep->parsed()) return vplan::cmd_report(o.run_dir);
    const std::string command = app.get_subcommands().front()->get_name();
    const vplan::RunConfig cfg = build_config(o, command);
    if (command == "gen") return vplan::cmd_gen(cfg);
    if (command == "train") return vplan::cmd_train(cfg);
    if (command == "eval") return vplan::cmd_eval(cfg);
    if (command == "sweep-noise") return vplan::cmd_sweep_noise(cfg);
    if (command == "ablate") return vplan::cmd_ablate(cfg);
  } catch (const vplan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vplan::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const vplan::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
