#include <benchmark/benchmark.h>

#include <random>

#include "okgllm/alignment.hpp"
#include "okgllm/sst_data.hpp"
#include "okgllm/trainer.hpp"
#include "okgllm/transe.hpp"

using namespace okgllm;

namespace {

const SyntheticDataset& fullsize_dataset() {
    static SyntheticDataset ds = make_synthetic_fullsize(7, 24);
    return ds;
}

void BM_KHopRetrieval(benchmark::State& state) {
    const auto& ds = fullsize_dataset();
    int k = static_cast<int>(state.range(0));
    auto regions = ds.graph.region_ids();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            ds.graph.k_hop_neighborhood(regions[i % regions.size()], k));
        ++i;
    }
}
BENCHMARK(BM_KHopRetrieval)->Arg(1)->Arg(2)->Arg(3);

void BM_Verbalize(benchmark::State& state) {
    const auto& ds = fullsize_dataset();
    auto regions = ds.graph.region_ids();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            ds.graph.verbalize(regions[i % regions.size()], 1, 15.0));
        ++i;
    }
}
BENCHMARK(BM_Verbalize);

void BM_CrossAttend(benchmark::State& state) {
    std::mt19937_64 rng(1);
    int keys = static_cast<int>(state.range(0));
    AlignmentParams params(16, 32, 16, rng);
    std::normal_distribution<double> dist;
    Eigen::MatrixXd q(5, 16), k(keys, 32);
    for (Eigen::Index r = 0; r < q.rows(); ++r)
        for (Eigen::Index c = 0; c < q.cols(); ++c) q(r, c) = dist(rng);
    for (Eigen::Index r = 0; r < k.rows(); ++r)
        for (Eigen::Index c = 0; c < k.cols(); ++c) k(r, c) = dist(rng);
    for (auto _ : state) {
        CrossAttention att = cross_attend(ad::constant(q), ad::constant(k), params);
        benchmark::DoNotOptimize(att.output->value);
    }
}
BENCHMARK(BM_CrossAttend)->Arg(16)->Arg(64)->Arg(256);

void BM_TransEEpoch(benchmark::State& state) {
    SyntheticConfig sc;
    sc.regions = 100;
    sc.currents = 8;
    sc.seas = 5;
    sc.timesteps = 10;
    SyntheticDataset ds = make_synthetic(sc);
    for (auto _ : state) {
        TransEConfig tc;
        tc.d = 32;
        tc.epochs = 1;
        benchmark::DoNotOptimize(pretrain(ds.graph, tc));
    }
}
BENCHMARK(BM_TransEEpoch);

void BM_ModelForward(benchmark::State& state) {
    SyntheticConfig sc;
    sc.regions = 10;
    sc.timesteps = 60;
    SyntheticDataset ds = make_synthetic(sc);
    TransEConfig tc;
    tc.d = 16;
    tc.epochs = 5;
    EmbeddingTable table = pretrain(ds.graph, tc).table;
    ExperimentConfig cfg;
    cfg.d = 16;
    OkgLlmModel model(cfg, &ds.graph, &table,
                      std::make_shared<HashedTextEncoder>(cfg.d, cfg.seed),
                      make_backbone(cfg), ds.data.region_ids,
                      ds.data.region_means());
    Eigen::VectorXd window = ds.data.values.row(0).head(cfg.lookback);
    for (auto _ : state)
        benchmark::DoNotOptimize(model.predict_celsius(0, window));
}
BENCHMARK(BM_ModelForward);

void BM_TrainEpoch(benchmark::State& state) {
    SyntheticConfig sc;
    sc.regions = 5;
    sc.timesteps = 200;
    SyntheticDataset ds = make_synthetic(sc);
    TransEConfig tc;
    tc.d = 8;
    tc.epochs = 5;
    EmbeddingTable table = pretrain(ds.graph, tc).table;
    ExperimentConfig cfg;
    cfg.d = 8;
    cfg.d_m = 8;
    cfg.d_k = 8;
    cfg.token_length = 6;
    cfg.backbone_hidden = 8;
    cfg.backbone_layers = 1;
    cfg.backbone_heads = 2;
    cfg.decoder_layers = 1;
    cfg.decoder_heads = 2;
    cfg.max_epochs = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(train_model(cfg, &ds.graph, &table, ds.data));
}
BENCHMARK(BM_TrainEpoch);

}  // namespace

BENCHMARK_MAIN();
