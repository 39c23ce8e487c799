#include <benchmark/benchmark.h>
#include <unistd.h>

#include <filesystem>
#include <iostream>
#include <numeric>

#include "vplan/harness.hpp"

namespace {

namespace fs = std::filesystem;
using namespace vplan;

// One small corpus and a briefly trained model, shared by every benchmark.
struct World {
  fs::path dir;
  RunConfig cfg;
  std::unique_ptr<Experiment> exp;
  TrainingSet set;

  World() {
    dir = fs::temp_directory_path() / ("vplan_bench_" + std::to_string(::getpid()));
    cfg.out = dir;
    cfg.set("corpus.preset", "crosstask");
    cfg.set("corpus.n_train", "120");
    cfg.set("corpus.n_test", "40");
    cfg.set("train.epochs", "1");
    cfg.set("seeds", "1");
    cfg.set("beam.token_score", "log_softmax");
    std::cout.setstate(std::ios::failbit);
    cmd_gen(cfg);
    std::cout.clear();
    exp = std::make_unique<Experiment>(cfg, load_corpus(cfg.corpus_path()));
    exp->train_model("full", 0);
    const ForecasterConfig m = model_config_for(cfg, "full");
    set = build_training_set(exp->corpus().train, *exp->corpus().observations, m.condition, m.delta, 4);
  }
  ~World() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

World& world() {
  static World w;
  return w;
}

void BM_BatchGradient(benchmark::State& state) {
  World& w = world();
  const bool parallel = state.range(0) != 0;
  const NeuralForecaster& model = w.exp->model("full", 0);
  std::vector<std::size_t> batch(std::min<std::size_t>(32, w.set.instances.size()));
  std::iota(batch.begin(), batch.end(), 0);
  NeuralForecaster grad = model.zeros_like();
  for (auto _ : state) {
    grad.for_each_param([](const std::string&, Matrix& p) { p.setZero(); });
    benchmark::DoNotOptimize(batch_gradient(model, w.set, batch, w.exp->corpus().vocab, {}, grad, parallel));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
  state.SetLabel(parallel ? "parallel" : "serial");
}
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  World& w = world();
  const std::string condition = state.range(1) != 0 ? "full" : "markov_goal";
  RunConfig cfg = w.cfg;
  cfg.parallel = state.range(0) != 0;
  Experiment exp(cfg, load_corpus(cfg.corpus_path()));
  for (auto _ : state) benchmark::DoNotOptimize(exp.evaluate(condition, 0, 0.0));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * exp.examples().size()));
  state.SetLabel(condition + (cfg.parallel ? " parallel" : " serial"));
}
BENCHMARK(BM_Evaluate)->Args({0, 0})->Args({1, 0})->Args({0, 1})->Args({1, 1})->Unit(benchmark::kMillisecond);

void BM_SequenceForward(benchmark::State& state) {
  SequenceModelConfig c;
  c.architecture = state.range(1) != 0 ? Architecture::kRecurrent : Architecture::kTransformer;
  const auto model = SequenceModel::initialize(c, 1);
  const Matrix x = Matrix::Random(state.range(0), static_cast<Eigen::Index>(c.d));
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
  state.SetLabel(to_string(c.architecture));
}
BENCHMARK(BM_SequenceForward)->Args({32, 0})->Args({128, 0})->Args({32, 1})->Args({128, 1});

}  // namespace

BENCHMARK_MAIN();
