#include <agarseg/evaluation.hpp>
#include <agarseg/gcode.hpp>
#include <agarseg/prompts.hpp>
#include <agarseg/segmentation.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace agarseg;

namespace {

BinaryMask random_mask(std::mt19937& rng, int w, int h) {
    std::bernoulli_distribution bit(0.5);
    BinaryMask m(w, h);
    for (auto& v : m.pixels()) v = bit(rng);
    return m;
}

/// Blocky two-colour image, closer to real removal maps than white noise.
RasterImage blocky_binary(std::mt19937& rng, int w, int h) {
    std::bernoulli_distribution bit(0.4);
    RasterImage img(w, h, kWhite);
    for (int by = 0; by < h; by += 8)
        for (int bx = 0; bx < w; bx += 8)
            if (bit(rng))
                for (int y = by; y < std::min(h, by + 8); ++y)
                    for (int x = bx; x < std::min(w, bx + 8); ++x) img.at(x, y) = kBlack;
    return img;
}

RasterImage random_image(std::mt19937& rng, int w, int h) {
    std::uniform_int_distribution<int> ch(0, 255);
    RasterImage img(w, h);
    for (auto& px : img.pixels())
        px = {std::uint8_t(ch(rng)), std::uint8_t(ch(rng)), std::uint8_t(ch(rng))};
    return img;
}

// Largest dataset image is 402 x 424.
constexpr int kSide = 424;

void BM_Iou(benchmark::State& state) {
    std::mt19937 rng(1);
    const int side = static_cast<int>(state.range(0));
    const BinaryMask a = random_mask(rng, side, side);
    const BinaryMask b = random_mask(rng, side, side);
    for (auto _ : state) benchmark::DoNotOptimize(iou(a, b));
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Iou)->Arg(64)->Arg(kSide);

void BM_PlanEmitSimulate(benchmark::State& state) {
    std::mt19937 rng(2);
    const int side = static_cast<int>(state.range(0));
    const RasterImage img = blocky_binary(rng, side, side);
    MachineConfig cfg;
    cfg.mm_per_pixel = 0.2;
    for (auto _ : state) {
        const std::string text = emit_gcode(plan_toolpath(img, cfg)).to_text();
        benchmark::DoNotOptimize(simulate_toolpath(parse_gcode(text), cfg, side, side));
    }
}
BENCHMARK(BM_PlanEmitSimulate)->Arg(128)->Arg(kSide)->Unit(benchmark::kMillisecond);

void BM_OptimizeTravel(benchmark::State& state) {
    std::mt19937 rng(3);
    const Toolpath path = plan_toolpath(blocky_binary(rng, kSide, kSide), MachineConfig{});
    for (auto _ : state) benchmark::DoNotOptimize(optimize_travel(path));
}
BENCHMARK(BM_OptimizeTravel)->Unit(benchmark::kMillisecond);

void BM_GridAndDedup(benchmark::State& state) {
    std::mt19937 rng(4);
    const RasterImage img = random_image(rng, kSide, kSide);
    const BinaryMask fg(kSide, kSide, 1);
    PromptGridConfig cfg;
    cfg.rows = cfg.cols = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(dedup_prompts(generate_grid(img, cfg, fg), cfg));
}
BENCHMARK(BM_GridAndDedup)->Arg(16)->Arg(64);

void BM_SegmentOtsu(benchmark::State& state) {
    std::mt19937 rng(5);
    const RasterImage img = random_image(rng, kSide, kSide);
    const BinaryMask fg(kSide, kSide, 1);
    for (auto _ : state) benchmark::DoNotOptimize(segment_threshold(img, fg, ThresholdBackend{}));
}
BENCHMARK(BM_SegmentOtsu)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
