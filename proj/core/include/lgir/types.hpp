#pragma once

// Domain model shared by every stage of the retrieval engine. All types are
// plain values: once built they are never mutated in place by the engine, so
// they can be copied across threads freely.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgir/error.hpp"

namespace lgir {

enum class QueryKind { TIR, CIR, ChatIR };

enum class InstructionKind { Addition, Removal, Modification, Comparison, Retention };

enum class Stage { Stage1 = 1, Stage2 = 2, Stage3 = 3 };

enum class Answer { Yes, No, Ambiguous };

enum class BackendRole { Captioner, Reasoner, Verifier, Evaluator, TextEncoder, ImageEncoder };

inline constexpr BackendRole kAllRoles[] = {
    BackendRole::Captioner, BackendRole::Reasoner,    BackendRole::Verifier,
    BackendRole::Evaluator, BackendRole::TextEncoder, BackendRole::ImageEncoder,
};

/// Which text carries a Chat-IR session into the next round.
enum class ChatReference { ComprehensiveSynthesis, Top1Caption };

std::string_view to_string(QueryKind kind);
std::string_view to_string(InstructionKind kind);
std::string_view to_string(Stage stage);
std::string_view to_string(Answer answer);
std::string_view to_string(BackendRole role);
std::string_view to_string(ChatReference ref);

QueryKind query_kind_from_string(std::string_view name);
/// Case-insensitive; throws Error(ParseError) for anything outside the five kinds.
InstructionKind instruction_kind_from_string(std::string_view name);
Stage stage_from_string(std::string_view name);
Answer answer_from_string(std::string_view name);
BackendRole backend_role_from_string(std::string_view name);
ChatReference chat_reference_from_string(std::string_view name);

struct ImageRecord {
    std::string id;
    std::string uri;
    std::string content_hash;
    std::optional<std::string> caption;

    bool operator==(const ImageRecord&) const = default;
};

/// Builds a record whose content_hash is the SHA-256 of `bytes`.
ImageRecord make_image_record(std::string id, std::string uri,
                              std::span<const std::uint8_t> bytes);

struct Embedding {
    std::vector<float> values;
    std::size_t dim = 0;
    bool normalized = false;

    /// L2-normalizes `raw`. Throws InvalidArgument on empty, zero or non-finite input.
    static Embedding unit(std::vector<float> raw);

    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;

    bool operator==(const Embedding&) const = default;
};

struct RetrievalQuery {
    QueryKind kind = QueryKind::TIR;
    std::string text;
    std::optional<ImageRecord> reference_image;
    std::vector<std::string> dialog;

    bool operator==(const RetrievalQuery&) const = default;
};

/// nullopt when the query is well formed for its kind.
std::optional<ErrorCode> validate_query(const RetrievalQuery& query);
void require_valid(const RetrievalQuery& query);

struct AtomicInstruction {
    InstructionKind kind = InstructionKind::Retention;
    std::string text;

    bool operator==(const AtomicInstruction&) const = default;
};

struct TargetDescriptions {
    std::string core_elements;
    std::string enhanced_details;
    std::string comprehensive_synthesis;

    bool complete() const {
        return !core_elements.empty() && !enhanced_details.empty() &&
               !comprehensive_synthesis.empty();
    }
    bool operator==(const TargetDescriptions&) const = default;
};

struct Proposition {
    std::string statement;
    std::string question;
    bool truth_value = true;

    bool operator==(const Proposition&) const = default;
};

/// Verifier answers for the top-k candidates. A count of -1 marks a candidate
/// whose verification failed at the transport level.
struct VerificationMatrix {
    std::vector<std::string> candidate_ids;
    std::vector<Proposition> propositions;
    std::vector<std::vector<Answer>> answers;
    std::vector<int> counts;

    bool operator==(const VerificationMatrix&) const = default;
};

struct EvaluatorVerdict {
    std::string image_id;
    bool accepted = false;
    std::string justification;

    bool operator==(const EvaluatorVerdict&) const = default;
};

struct StageTrace {
    std::vector<AtomicInstruction> atomic_instructions;
    TargetDescriptions descriptions;
    std::vector<Proposition> propositions;
    std::vector<EvaluatorVerdict> evaluator_verdicts;
    std::optional<VerificationMatrix> verification;
    std::vector<std::string> notes;

    bool operator==(const StageTrace&) const = default;
};

inline constexpr int kVerificationFailed = -1;

struct RankedEntry {
    std::string image_id;
    double stage1_score = 0.0;
    std::optional<int> stage2_count;
    std::optional<bool> stage3_flag;
    int stage1_rank = 0;

    bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
    std::vector<RankedEntry> entries;
    Stage stage = Stage::Stage1;
    StageTrace trace;

    bool operator==(const RankedList&) const = default;
};

/// Describes the first violated ordering/consistency invariant, or nullopt.
std::optional<std::string> check_ranked_list(const RankedList& list);

struct PipelineConfig {
    double tau = 0.15;
    int k_verify = 20;
    int alpha_evaluate = 3;
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 1024;
    int response_top_k = 50;
    ChatReference chat_ref = ChatReference::ComprehensiveSynthesis;
    std::map<BackendRole, std::string> endpoints;

    /// Throws Error(ConfigError) naming the offending key.
    void validate() const;

    bool operator==(const PipelineConfig&) const = default;
};

// Canonical JSON encoding (snake_case field names).
void to_json(nlohmann::json& j, QueryKind v);
void from_json(const nlohmann::json& j, QueryKind& v);
void to_json(nlohmann::json& j, InstructionKind v);
void from_json(const nlohmann::json& j, InstructionKind& v);
void to_json(nlohmann::json& j, Stage v);
void from_json(const nlohmann::json& j, Stage& v);
void to_json(nlohmann::json& j, Answer v);
void from_json(const nlohmann::json& j, Answer& v);
void to_json(nlohmann::json& j, const ImageRecord& v);
void from_json(const nlohmann::json& j, ImageRecord& v);
void to_json(nlohmann::json& j, const Embedding& v);
void from_json(const nlohmann::json& j, Embedding& v);
void to_json(nlohmann::json& j, const RetrievalQuery& v);
void from_json(const nlohmann::json& j, RetrievalQuery& v);
void to_json(nlohmann::json& j, const AtomicInstruction& v);
void from_json(const nlohmann::json& j, AtomicInstruction& v);
void to_json(nlohmann::json& j, const TargetDescriptions& v);
void from_json(const nlohmann::json& j, TargetDescriptions& v);
void to_json(nlohmann::json& j, const Proposition& v);
void from_json(const nlohmann::json& j, Proposition& v);
void to_json(nlohmann::json& j, const VerificationMatrix& v);
void from_json(const nlohmann::json& j, VerificationMatrix& v);
void to_json(nlohmann::json& j, const EvaluatorVerdict& v);
void from_json(const nlohmann::json& j, EvaluatorVerdict& v);
void to_json(nlohmann::json& j, const StageTrace& v);
void from_json(const nlohmann::json& j, StageTrace& v);
void to_json(nlohmann::json& j, const RankedEntry& v);
void from_json(const nlohmann::json& j, RankedEntry& v);
void to_json(nlohmann::json& j, const RankedList& v);
void from_json(const nlohmann::json& j, RankedList& v);
void to_json(nlohmann::json& j, const PipelineConfig& v);
void from_json(const nlohmann::json& j, PipelineConfig& v);

}  // namespace lgir
