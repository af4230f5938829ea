#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "detgeom/convergence.hpp"
#include "detgeom/dataset_io.hpp"
#include "detgeom/decoder.hpp"
#include "detgeom/evaluation.hpp"
#include "detgeom/loss.hpp"
#include "detgeom/nms.hpp"

namespace {

using namespace detgeom;

std::vector<Box> random_boxes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 400.0), size(5.0, 80.0);
  std::vector<Box> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = pos(rng), y = pos(rng);
    out.emplace_back(x, y, x + size(rng), y + size(rng));
  }
  return out;
}

std::vector<Detection> random_detections(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::vector<Detection> out;
  for (const Box& b : random_boxes(n, seed)) out.push_back({"img", b, score(rng), kDefaultClassName});
  return out;
}

void BM_Iou(benchmark::State& state) {
  const auto boxes = random_boxes(1024, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(boxes[i & 1023], boxes[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_DiouMetric(benchmark::State& state) {
  const auto boxes = random_boxes(1024, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(diou_metric(boxes[i & 1023], boxes[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_DiouMetric);

void BM_LossGradient(benchmark::State& state) {
  const auto kind = static_cast<LossKind>(state.range(0));
  const auto boxes = random_boxes(1024, 3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        loss_gradient(kind, to_center(boxes[i & 1023]), to_center(boxes[(i + 1) & 1023])));
    ++i;
  }
}
BENCHMARK(BM_LossGradient)->Arg(static_cast<int>(LossKind::IoU))->Arg(static_cast<int>(LossKind::DIoU));

void BM_GreedyNms(benchmark::State& state) {
  const auto metric = static_cast<SuppressionMetric>(state.range(1));
  const auto dets = random_detections(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_nms(dets, kDefaultNmsThreshold, metric));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GreedyNms)->ArgsProduct({{100, 1000}, {0, 1}});

void BM_DecodeHeads(benchmark::State& state) {
  DecoderConfig config = default_decoder_config();
  config.conf_threshold = 0.25;
  std::mt19937_64 rng(5);
  std::normal_distribution<float> logit(-2.0f, 2.0f);
  std::vector<RawHead> heads;
  for (const auto& spec : config.grid_specs()) {
    RawHead h{spec.grid_size, std::vector<float>(spec.expected_length())};
    for (auto& v : h.values) v = logit(rng);
    heads.push_back(std::move(h));
  }
  for (auto _ : state) benchmark::DoNotOptimize(decode_heads(heads, config, "img"));
}
BENCHMARK(BM_DecodeHeads)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const std::size_t images = 200;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> score(0.0, 1.0), jitter(-5.0, 5.0);
  DatasetIndex index;
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < images; ++i) {
    const std::string id = "img" + std::to_string(i);
    std::vector<GroundTruth> gts;
    for (const Box& b : random_boxes(5, 100 + i)) {
      gts.push_back({id, b, kDefaultClassName});
      for (int k = 0; k < 3; ++k) {
        dets.push_back({id, b.translated(jitter(rng), jitter(rng)), score(rng), kDefaultClassName});
      }
    }
    index.add_image(id, std::move(gts));
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(index, dets));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dets.size()));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

void BM_ConvergenceBenchmark(benchmark::State& state) {
  SimConfig config;
  config.case_count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_benchmark(config));
}
BENCHMARK(BM_ConvergenceBenchmark)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
