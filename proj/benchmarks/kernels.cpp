#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "lgir/index.hpp"
#include "lgir/stage1.hpp"
#include "lgir/stage2.hpp"
#include "lgir/stage3.hpp"

using namespace lgir;

namespace {

std::vector<float> unit_rows(std::mt19937& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<float> g;
    std::vector<float> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        float sq = 0.0f;
        for (std::size_t k = 0; k < d; ++k) {
            out[i * d + k] = g(rng);
            sq += out[i * d + k] * out[i * d + k];
        }
        for (std::size_t k = 0; k < d; ++k) out[i * d + k] /= std::sqrt(sq);
    }
    return out;
}

EmbeddingIndex make_index(std::size_t n, std::size_t d) {
    std::mt19937 rng(7);
    std::vector<ImageRecord> images;
    std::vector<CaptionRecord> captions;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = "img" + std::to_string(i);
        images.push_back(make_image_record(id, "mem://" + id, to_bytes(id)));
        captions.push_back({id, "caption " + id, "bench"});
    }
    return EmbeddingIndex(images, captions, d, unit_rows(rng, n, d), unit_rows(rng, n, d));
}

void BM_Cosine(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::size_t d = 512;
    std::mt19937 rng(1);
    const auto rows = unit_rows(rng, n, d);
    const auto q = unit_rows(rng, 1, d);
    for (auto _ : state) benchmark::DoNotOptimize(cosine_scores(q, rows, d));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Cosine)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Fuse(benchmark::State& state) {
    const auto index = make_index(static_cast<std::size_t>(state.range(0)), 512);
    std::mt19937 rng(2);
    std::vector<std::vector<float>> views;
    for (int g = 0; g < 3; ++g) views.push_back(unit_rows(rng, 1, 512));
    for (auto _ : state) benchmark::DoNotOptimize(fuse_embedded(views, index, 0.15));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * state.range(0)));
}
BENCHMARK(BM_Fuse)->Arg(1000)->Arg(10000)->Arg(50000);

void BM_Argsort(benchmark::State& state) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u;
    std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
    for (auto& s : scores) s = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(argsort_desc(scores));
}
BENCHMARK(BM_Argsort)->Arg(1000)->Arg(100000);

void BM_Rerank(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937 rng(4);
    std::vector<double> scores(n);
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = static_cast<double>(rng() % 1000);
        ids[i] = "img" + std::to_string(i);
    }
    const auto s1 = rank_stage1(scores, ids);
    std::vector<int> counts(20);
    for (auto& c : counts) c = static_cast<int>(rng() % 4);
    const auto first = rerank_stage2(s1, counts, 20);
    const std::vector<EvaluatorVerdict> verdicts{{first.entries[0].image_id, false, ""},
                                                 {first.entries[1].image_id, true, ""}};
    for (auto _ : state) {
        auto s2 = rerank_stage2(s1, counts, 20);
        benchmark::DoNotOptimize(promote(s2, verdicts, 3));
    }
}
BENCHMARK(BM_Rerank)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
