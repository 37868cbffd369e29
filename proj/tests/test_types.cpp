#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lgir/digest.hpp"
#include "lgir/types.hpp"

using namespace lgir;
using nlohmann::json;

namespace {

ImageRecord img(const std::string& id) { return make_image_record(id, "mem://" + id, to_bytes(id)); }

template <typename T>
void expect_round_trip(const T& value) {
    const json j = value;
    const T back = j.get<T>();
    EXPECT_EQ(back, value) << j.dump();
    EXPECT_EQ(json(back).dump(), j.dump());
}

}  // namespace

TEST(ValidateQuery, CirWithReferenceIsValid) {
    EXPECT_EQ(validate_query({QueryKind::CIR, "make it red", img("img1"), {}}), std::nullopt);
}

TEST(ValidateQuery, CirWithoutReference) {
    EXPECT_EQ(validate_query({QueryKind::CIR, "make it red", std::nullopt, {}}), ErrorCode::MissingReference);
}

TEST(ValidateQuery, TirEmptyText) {
    EXPECT_EQ(validate_query({QueryKind::TIR, "", std::nullopt, {}}), ErrorCode::EmptyText);
    EXPECT_EQ(validate_query({QueryKind::TIR, "  \t\n", std::nullopt, {}}), ErrorCode::EmptyText);
}

TEST(ValidateQuery, TirWithReference) {
    EXPECT_EQ(validate_query({QueryKind::TIR, "a dog", img("x"), {}}), ErrorCode::UnexpectedReference);
}

TEST(ValidateQuery, RequireValidTagsStage) {
    try {
        require_valid({QueryKind::CIR, "x", std::nullopt, {}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingReference);
        EXPECT_EQ(e.stage(), "validate");
    }
}

TEST(ImageRecordTest, ContentHashIsDeterministic) {
    const auto a = make_image_record("a", "u", to_bytes("same bytes"));
    const auto b = make_image_record("b", "v", to_bytes("same bytes"));
    EXPECT_EQ(a.content_hash, b.content_hash);
    EXPECT_EQ(a.content_hash, sha256_hex(std::string_view("same bytes")));
    EXPECT_NE(a.content_hash, make_image_record("a", "u", to_bytes("other")).content_hash);
}

TEST(EmbeddingTest, UnitNormalizes) {
    const auto e = Embedding::unit({3.0f, 4.0f});
    EXPECT_TRUE(e.normalized);
    EXPECT_EQ(e.dim, 2u);
    EXPECT_NEAR(e.values[0], 0.6f, 1e-7);
    EXPECT_NEAR(e.values[1], 0.8f, 1e-7);
    EXPECT_NO_THROW(e.validate());
}

TEST(EmbeddingTest, RejectsDegenerateInput) {
    EXPECT_THROW(Embedding::unit({}), Error);
    EXPECT_THROW(Embedding::unit({0.0f, 0.0f}), Error);
    EXPECT_THROW(Embedding::unit({1.0f, NAN}), Error);
    Embedding bad{{1.0f, 1.0f}, 2, true};
    EXPECT_THROW(bad.validate(), Error);
    Embedding ragged{{1.0f}, 2, false};
    EXPECT_THROW(ragged.validate(), Error);
}

TEST(EnumNames, RoundTripEveryValue) {
    for (auto k : {QueryKind::TIR, QueryKind::CIR, QueryKind::ChatIR}) EXPECT_EQ(query_kind_from_string(to_string(k)), k);
    for (auto k : {InstructionKind::Addition, InstructionKind::Removal, InstructionKind::Modification,
                   InstructionKind::Comparison, InstructionKind::Retention}) {
        EXPECT_EQ(instruction_kind_from_string(to_string(k)), k);
    }
    for (auto r : kAllRoles) EXPECT_EQ(backend_role_from_string(to_string(r)), r);
    for (auto s : {Stage::Stage1, Stage::Stage2, Stage::Stage3}) EXPECT_EQ(stage_from_string(to_string(s)), s);
    for (auto a : {Answer::Yes, Answer::No, Answer::Ambiguous}) EXPECT_EQ(answer_from_string(to_string(a)), a);
}

TEST(EnumNames, InstructionKindIsCaseInsensitiveAndClosed) {
    EXPECT_EQ(instruction_kind_from_string("addition"), InstructionKind::Addition);
    EXPECT_EQ(instruction_kind_from_string("MODIFICATION"), InstructionKind::Modification);
    try {
        instruction_kind_from_string("Replacement");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
}

TEST(ErrorCodes, NamesRoundTrip) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::NotFound); ++i) {
        const auto code = static_cast<ErrorCode>(i);
        EXPECT_EQ(error_code_from_string(to_string(code)), code);
    }
    EXPECT_EQ(error_code_from_string("Nope"), std::nullopt);
}

TEST(PipelineConfigTest, PaperDefaults) {
    const PipelineConfig c;
    EXPECT_DOUBLE_EQ(c.tau, 0.15);
    EXPECT_EQ(c.k_verify, 20);
    EXPECT_EQ(c.alpha_evaluate, 3);
    EXPECT_DOUBLE_EQ(c.temperature, 0.0);
    EXPECT_DOUBLE_EQ(c.top_p, 1.0);
    EXPECT_NO_THROW(c.validate());
}

TEST(PipelineConfigTest, RejectsOutOfRange) {
    auto bad = [](auto mutate) {
        PipelineConfig c;
        mutate(c);
        try {
            c.validate();
            return false;
        } catch (const Error& e) {
            return e.code() == ErrorCode::ConfigError;
        }
    };
    EXPECT_TRUE(bad([](PipelineConfig& c) { c.tau = 1.5; }));
    EXPECT_TRUE(bad([](PipelineConfig& c) { c.tau = -0.01; }));
    EXPECT_TRUE(bad([](PipelineConfig& c) { c.k_verify = 0; }));
    EXPECT_TRUE(bad([](PipelineConfig& c) { c.alpha_evaluate = 0; }));
    EXPECT_TRUE(bad([](PipelineConfig& c) { c.alpha_evaluate = 21; }));
    EXPECT_TRUE(bad([](PipelineConfig& c) { c.top_p = 0.0; }));
    EXPECT_FALSE(bad([](PipelineConfig& c) { c.tau = 1.0; }));
    EXPECT_FALSE(bad([](PipelineConfig& c) { c.tau = 0.0; }));
}

TEST(JsonRoundTrip, EveryCoreType) {
    expect_round_trip(img("a"));
    ImageRecord captioned = img("b");
    captioned.caption = "a red car";
    expect_round_trip(captioned);
    expect_round_trip(Embedding::unit({1.0f, 2.0f, 2.0f}));
    expect_round_trip(RetrievalQuery{QueryKind::CIR, "make it red", img("r"), {"d1", "d2"}});
    expect_round_trip(AtomicInstruction{InstructionKind::Removal, "Remove the hat."});
    expect_round_trip(TargetDescriptions{"a", "b", "c"});
    expect_round_trip(Proposition{"There is a hat.", "Is there a hat?", false});
    expect_round_trip(EvaluatorVerdict{"x", true, "fits"});

    VerificationMatrix vm;
    vm.candidate_ids = {"a", "b"};
    vm.propositions = {{"s", "q?", true}};
    vm.answers = {{Answer::Yes}, {Answer::Ambiguous}};
    vm.counts = {1, 0};
    expect_round_trip(vm);

    RankedList list;
    list.stage = Stage::Stage3;
    list.entries = {{"a", 0.5, 2, true, 2}, {"b", 0.75, std::nullopt, std::nullopt, 1}};
    list.trace.atomic_instructions = {{InstructionKind::Addition, "Add a hat."}};
    list.trace.descriptions = {"x", "y", "z"};
    list.trace.propositions = vm.propositions;
    list.trace.verification = vm;
    list.trace.evaluator_verdicts = {{"a", true, "ok"}};
    list.trace.notes = {"n"};
    expect_round_trip(list);

    PipelineConfig cfg;
    cfg.tau = 0.3;
    cfg.endpoints[BackendRole::Verifier] = "http://localhost:9000";
    cfg.chat_ref = ChatReference::Top1Caption;
    expect_round_trip(cfg);
}

TEST(JsonRoundTrip, SnakeCaseFieldNames) {
    const json j = RankedEntry{"a", 0.5, 2, true, 1};
    for (const char* key : {"image_id", "stage1_score", "stage2_count", "stage3_flag", "stage1_rank"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    const json q = RetrievalQuery{QueryKind::CIR, "t", img("r"), {}};
    EXPECT_TRUE(q.contains("reference_image"));
    EXPECT_EQ(q["kind"], "CIR");
}

TEST(JsonRoundTrip, RandomizedRankedLists) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        RankedList list;
        const int n = static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            RankedEntry e;
            e.image_id = "id" + std::to_string(rng() % 1000) + "_" + std::to_string(i);
            e.stage1_score = std::uniform_real_distribution<double>(-1, 1)(rng);
            e.stage1_rank = i + 1;
            if (rng() % 2) e.stage2_count = static_cast<int>(rng() % 5) - 1;
            if (rng() % 3 == 0) e.stage3_flag = rng() % 2 == 0;
            list.entries.push_back(e);
        }
        list.stage = static_cast<Stage>(1 + rng() % 3);
        expect_round_trip(list);
    }
}

TEST(RankedListInvariants, DetectsViolations) {
    RankedList ok;
    ok.stage = Stage::Stage1;
    ok.entries = {{"a", 0.9, {}, {}, 1}, {"b", 0.5, {}, {}, 2}, {"c", 0.5, {}, {}, 3}};
    EXPECT_EQ(check_ranked_list(ok), std::nullopt);

    auto swapped = ok;
    std::swap(swapped.entries[1], swapped.entries[2]);
    EXPECT_NE(check_ranked_list(swapped), std::nullopt);

    auto dup = ok;
    dup.entries[2].stage1_rank = 2;
    EXPECT_NE(check_ranked_list(dup), std::nullopt);

    RankedList s2;
    s2.stage = Stage::Stage2;
    s2.trace.propositions.resize(2);
    s2.entries = {{"b", 0.5, 2, {}, 2}, {"a", 0.9, 1, {}, 1}, {"c", 0.1, {}, {}, 3}};
    EXPECT_EQ(check_ranked_list(s2), std::nullopt);
    s2.entries[0].stage2_count = 3;
    EXPECT_NE(check_ranked_list(s2), std::nullopt) << "count above M";

    RankedList s3 = s2;
    s3.entries[0].stage2_count = 2;
    s3.stage = Stage::Stage3;
    std::rotate(s3.entries.begin(), s3.entries.begin() + 1, s3.entries.begin() + 2);
    s3.entries[0].stage3_flag = true;
    EXPECT_EQ(check_ranked_list(s3), std::nullopt);
}
