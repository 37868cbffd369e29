#include <gtest/gtest.h>

#include "lgir/benchmark.hpp"
#include "synthetic_world.hpp"

using namespace lgir;

namespace {

std::vector<BenchmarkCase> of_kind(const std::vector<BenchmarkCase>& cases, QueryKind kind) {
    std::vector<BenchmarkCase> out;
    for (const auto& c : cases) {
        if (c.query.kind == kind) out.push_back(c);
    }
    return out;
}

MetricReport bench(synth::World& w, const std::vector<BenchmarkCase>& cases, Stage last) {
    BenchmarkOptions opts;
    opts.last = last;
    return run_benchmark(cases, w.index, w.ctx(), opts);
}

}  // namespace

TEST(EndToEnd, WorldShape) {
    auto w = synth::make_e2e_world();
    EXPECT_EQ(w->index.size(), 32u);
    EXPECT_EQ(of_kind(w->cases, QueryKind::TIR).size(), 8u);
    EXPECT_GE(of_kind(w->cases, QueryKind::CIR).size(), 4u);
    const auto chat = of_kind(w->cases, QueryKind::ChatIR);
    ASSERT_EQ(chat.size(), 4u);
    for (const auto& c : chat) EXPECT_EQ(c.dialog_rounds->size(), 3u);
    EXPECT_TRUE(validate_cases(w->cases, &w->index).empty());
}

TEST(EndToEnd, PerfectRecallPerTask) {
    auto w = synth::make_e2e_world();
    for (auto kind : {QueryKind::TIR, QueryKind::CIR, QueryKind::ChatIR}) {
        const auto report = bench(*w, of_kind(w->cases, kind), Stage::Stage3);
        EXPECT_EQ(report.failed, 0u) << to_string(kind);
        EXPECT_DOUBLE_EQ(report.metrics.at("recall@1"), 1.0) << to_string(kind);
        if (kind == QueryKind::ChatIR) EXPECT_DOUBLE_EQ(report.metrics.at("hits@1/round3"), 1.0);
    }
}

TEST(EndToEnd, RankingsAreDeterministic) {
    auto a = synth::make_e2e_world();
    auto b = synth::make_e2e_world();
    const auto ra = report_to_json(bench(*a, a->cases, Stage::Stage3));
    const auto rb = report_to_json(bench(*b, b->cases, Stage::Stage3));
    EXPECT_EQ(ra.at("cases").size(), rb.at("cases").size());
    for (std::size_t i = 0; i < ra.at("cases").size(); ++i) {
        EXPECT_EQ(ra["cases"][i].at("top").dump(), rb["cases"][i].at("top").dump());
    }
    EXPECT_EQ(serialize_index(a->index), serialize_index(b->index));
}

TEST(Ablation, EachStageStrictlyImproves) {
    std::vector<synth::AblationCase> plan;
    auto w = synth::make_ablation_world(&plan);
    ASSERT_EQ(plan.size(), w->cases.size());
    const auto r1 = bench(*w, w->cases, Stage::Stage1).metrics.at("recall@1");
    const auto r2 = bench(*w, w->cases, Stage::Stage2).metrics.at("recall@1");
    const auto r3 = bench(*w, w->cases, Stage::Stage3).metrics.at("recall@1");
    EXPECT_LT(r1, r2);
    EXPECT_LT(r2, r3);
}

TEST(Ablation, StageOneRanksFollowThePlan) {
    std::vector<synth::AblationCase> plan;
    auto w = synth::make_ablation_world(&plan);
    const auto report = bench(*w, w->cases, Stage::Stage1);
    for (std::size_t i = 0; i < plan.size(); ++i) {
        ASSERT_EQ(report.cases[i].first_hit.size(), 1u);
        EXPECT_EQ(report.cases[i].first_hit[0], plan[i].target_stage1_rank) << plan[i].id;
    }
}
