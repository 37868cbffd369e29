#include <gtest/gtest.h>

#include <random>
#include <set>

#include "lgir/stage1.hpp"
#include "lgir/stage3.hpp"
#include "oracles.hpp"
#include "rig.hpp"

using namespace lgir;
using synth::Rig;

namespace {

std::vector<std::string> order_of(const RankedList& l) {
    std::vector<std::string> out;
    for (const auto& e : l.entries) out.push_back(e.image_id);
    return out;
}

RankedList stage2_of(const EmbeddingIndex& idx) {
    std::vector<double> scores(idx.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = -static_cast<double>(i);
    auto l = rank_stage1(scores, idx);
    l.stage = Stage::Stage2;
    return l;
}

std::string candidate_uri(const ChatRequest& req) {
    std::string uri;
    for (const auto& p : req.messages.back().parts) {
        if (p.kind == ContentPart::Kind::Image) uri = p.image.uri;
    }
    return uri;
}

// Evaluator accepting exactly the listed uris.
void accept_only(MockBackend& mock, std::set<std::string> uris) {
    mock.on_chat(BackendRole::Evaluator, [uris](const ChatRequest& req) -> std::string {
        return uris.count(candidate_uri(req)) ? "Reasoning: fits.\nANSWER: Yes" : "Reasoning: no.\nANSWER: No";
    });
}

}  // namespace

TEST(Promote, Examples) {
    RankedList l;
    for (auto id : {"A", "B", "C", "D"}) l.entries.push_back({id});
    const std::vector<EvaluatorVerdict> second{{"A", false, ""}, {"B", true, ""}};
    const auto out = promote(l, second, 3);
    EXPECT_EQ(order_of(out), (std::vector<std::string>{"B", "A", "C", "D"}));
    EXPECT_EQ(out.stage, Stage::Stage3);
    EXPECT_EQ(out.entries[0].stage3_flag, true);
    EXPECT_EQ(out.entries[1].stage3_flag, false);
    EXPECT_FALSE(out.entries[2].stage3_flag.has_value());

    const std::vector<EvaluatorVerdict> none{{"A", false, ""}, {"B", false, ""}, {"C", false, ""}};
    EXPECT_EQ(order_of(promote(l, none, 3)), order_of(l));
    EXPECT_THROW(promote(l, none, 0), Error);
    const std::vector<EvaluatorVerdict> wrong{{"B", true, ""}};
    EXPECT_THROW(promote(l, wrong, 3), Error);
}

TEST(Promote, RandomizedAgainstOracle) {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 8;
        const std::size_t alpha = 1 + rng() % 4;
        RankedList l;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back("c" + std::to_string(i));
            l.entries.push_back({ids.back()});
        }
        std::vector<EvaluatorVerdict> verdicts;
        std::vector<bool> flags;
        for (std::size_t j = 0; j < std::min(n, alpha); ++j) {
            const bool ok = rng() % 3 == 0;
            verdicts.push_back({ids[j], ok, ""});
            flags.push_back(ok);
            if (ok) break;
        }
        const auto out = order_of(promote(l, verdicts, alpha));
        ASSERT_EQ(out, oracle::promote(ids, flags, alpha));
        // At most one entry moved and everything else keeps relative order.
        std::vector<std::string> rest(out.begin() + 1, out.end());
        auto expect_rest = ids;
        expect_rest.erase(std::find(expect_rest.begin(), expect_rest.end(), out.front()));
        ASSERT_EQ(rest, expect_rest);
    }
}

TEST(RunStage3, StopsAtFirstAcceptance) {
    std::mt19937 rng(42);
    Rig rig;
    const auto idx = synth::random_index(rng, 6, 8, &rig.source);
    accept_only(*rig.mock, {"mem://img1", "mem://img2"});
    const auto out = run_stage3(stage2_of(idx), std::nullopt, "a thing", idx, rig.ctx());
    EXPECT_EQ(order_of(out), (std::vector<std::string>{"img1", "img0", "img2", "img3", "img4", "img5"}));
    EXPECT_EQ(rig.mock->call_count(BackendRole::Evaluator), 2u);
    ASSERT_EQ(out.trace.evaluator_verdicts.size(), 2u);
    EXPECT_EQ(check_ranked_list(out), std::nullopt);
}

TEST(RunStage3, NoAcceptanceKeepsOrderAndSpendsAlpha) {
    std::mt19937 rng(43);
    Rig rig;
    const auto idx = synth::random_index(rng, 6, 8, &rig.source);
    accept_only(*rig.mock, {"mem://img5"});
    const auto in = stage2_of(idx);
    const auto out = run_stage3(in, std::nullopt, "a thing", idx, rig.ctx());
    EXPECT_EQ(order_of(out), order_of(in));
    EXPECT_EQ(rig.mock->call_count(BackendRole::Evaluator), 3u);
}

TEST(RunStage3, AcceptAtTopCostsOneCall) {
    std::mt19937 rng(44);
    Rig rig;
    const auto idx = synth::random_index(rng, 6, 8, &rig.source);
    accept_only(*rig.mock, {"mem://img0", "mem://img1"});
    const auto out = run_stage3(stage2_of(idx), std::nullopt, "a thing", idx, rig.ctx());
    EXPECT_EQ(rig.mock->call_count(BackendRole::Evaluator), 1u);
    EXPECT_EQ(out.entries[0].image_id, "img0");
}

TEST(RunStage3, ImageCountPerTask) {
    std::mt19937 rng(45);
    Rig rig;
    const auto idx = synth::random_index(rng, 3, 8, &rig.source);
    accept_only(*rig.mock, {});
    run_stage3(stage2_of(idx), std::nullopt, "a thing", idx, rig.ctx());
    for (const auto& c : rig.mock->calls()) EXPECT_EQ(c.images, 1u);
    rig.mock->clear_calls();

    const ImagePart ref{to_bytes("reference"), "mem://ref", ""};
    run_stage3(stage2_of(idx), ref, "make it red", idx, rig.ctx());
    const auto calls = rig.mock->calls();
    ASSERT_EQ(calls.size(), 3u);
    for (const auto& c : calls) {
        EXPECT_EQ(c.images, 2u);
        EXPECT_NE(c.text.find("make it red"), std::string::npos);
    }
}

TEST(RunStage3, AmbiguousAndFailuresReject) {
    std::mt19937 rng(46);
    Rig rig;
    const auto idx = synth::random_index(rng, 4, 8, &rig.source);
    rig.mock->on_chat(BackendRole::Evaluator, [](const ChatRequest& req) -> std::string {
        const auto uri = candidate_uri(req);
        if (uri == "mem://img0") return "I think it matches but I will not say.";
        if (uri == "mem://img1") throw Error(ErrorCode::Timeout, "slow");
        return "ANSWER: Yes";
    });
    const auto out = run_stage3(stage2_of(idx), std::nullopt, "x", idx, rig.ctx());
    EXPECT_EQ(order_of(out), (std::vector<std::string>{"img2", "img0", "img1", "img3"}));
    ASSERT_EQ(out.trace.evaluator_verdicts.size(), 3u);
    EXPECT_FALSE(out.trace.evaluator_verdicts[0].accepted);
    EXPECT_FALSE(out.trace.evaluator_verdicts[1].accepted);
}

TEST(RunStage3, NonTransientErrorsPropagate) {
    std::mt19937 rng(47);
    Rig rig;
    const auto idx = synth::random_index(rng, 2, 8, &rig.source);
    rig.mock->fail(BackendRole::Evaluator, ErrorCode::ConfigError);
    EXPECT_THROW(run_stage3(stage2_of(idx), std::nullopt, "x", idx, rig.ctx()), Error);
}

TEST(RunStage3, ReferenceIdenticalToCandidateIsNoted) {
    std::mt19937 rng(48);
    Rig rig;
    const auto idx = synth::random_index(rng, 3, 8, &rig.source);
    accept_only(*rig.mock, {});
    const ImagePart ref{to_bytes("image bytes img1"), "mem://img1", ""};
    const auto out = run_stage3(stage2_of(idx), ref, "x", idx, rig.ctx());
    bool noted = false;
    for (const auto& n : out.trace.notes) noted |= n.find("img1") != std::string::npos;
    EXPECT_TRUE(noted);
}

TEST(RunStage3, AlphaLargerThanListAndAlphaOne) {
    std::mt19937 rng(49);
    Rig rig;
    const auto idx = synth::random_index(rng, 2, 8, &rig.source);
    accept_only(*rig.mock, {});
    rig.config.alpha_evaluate = 10;
    run_stage3(stage2_of(idx), std::nullopt, "x", idx, rig.ctx());
    EXPECT_EQ(rig.mock->call_count(BackendRole::Evaluator), 2u);
    rig.mock->clear_calls();
    rig.config.alpha_evaluate = 1;
    accept_only(*rig.mock, {"mem://img1"});
    const auto out = run_stage3(stage2_of(idx), std::nullopt, "x", idx, rig.ctx());
    EXPECT_EQ(rig.mock->call_count(BackendRole::Evaluator), 1u);
    EXPECT_EQ(out.entries[0].image_id, "img0");
}
