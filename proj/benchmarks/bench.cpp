#include <benchmark/benchmark.h>

#include "fast0tag/eval.hpp"
#include "fast0tag/rank_net.hpp"
#include "fast0tag/ranksvm.hpp"
#include "fast0tag/rng.hpp"
#include "fast0tag/synth.hpp"
#include "fast0tag/tagger.hpp"

namespace {

f0t::SynthData& shared_data() {
  static f0t::SynthData data = [] {
    f0t::SynthSpec spec;
    spec.num_images = 400;
    spec.num_seen_tags = 60;
    spec.num_unseen_tags = 20;
    spec.feature_dim = 32;
    spec.embed_dim = 32;
    spec.margin = 0.15;
    spec.noise_sigma = 0.05;
    spec.seed = 2024;
    return f0t::generate(spec);
  }();
  return data;
}

void BM_TrainRankSvm(benchmark::State& state) {
  const auto& data = shared_data();
  const auto [relevant, irrelevant] =
      derive_rule(data.set, data.set.at(0).id, data.partition);
  const Eigen::MatrixXd pos = data.table.rows_for(relevant);
  const Eigen::MatrixXd neg = data.table.rows_for(irrelevant);
  const double lambda = state.range(0) / 1000.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f0t::train_rank_svm(pos, neg, lambda));
  }
}
BENCHMARK(BM_TrainRankSvm)->Arg(1)->Arg(1000);

void BM_NetGradient(benchmark::State& state) {
  const auto& data = shared_data();
  std::vector<f0t::BatchItem> batch;
  for (const std::size_t i : data.set.indices_of_split(f0t::Split::train)) {
    const auto [relevant, irrelevant] =
        derive_rule(data.set, data.set.at(i).id, data.partition);
    if (relevant.empty() || irrelevant.empty()) continue;
    batch.push_back({data.set.at(i).features, data.table.rows_for(relevant),
                     data.table.rows_for(irrelevant)});
    if (batch.size() == static_cast<std::size_t>(state.range(0))) break;
  }
  f0t::Rng rng(7);
  const f0t::MlpParams params = f0t::init_mlp(32, 32, 32, 32, rng);
  f0t::TrainConfig config;
  config.dropout_rate = 0.3;
  const f0t::MaskSource masks{42};
  for (auto _ : state) {
    benchmark::DoNotOptimize(f0t::gradient(params, batch, config, masks));
  }
}
BENCHMARK(BM_NetGradient)->Arg(16)->Arg(64);

void BM_ScoreAndAp(benchmark::State& state) {
  const auto& data = shared_data();
  f0t::Rng rng(11);
  Eigen::VectorXd direction(data.table.dim());
  for (int i = 0; i < data.table.dim(); ++i) direction(i) = rng.normal();
  const auto& truth = data.set.at(0).tags;
  for (auto _ : state) {
    const f0t::RankedTagList ranking = f0t::score_tags(direction, data.table);
    benchmark::DoNotOptimize(f0t::image_average_precision(ranking, truth));
  }
}
BENCHMARK(BM_ScoreAndAp);

}  // namespace

BENCHMARK_MAIN();
