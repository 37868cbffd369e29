#include "lgir/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lgir/digest.hpp"
#include "lgir/text.hpp"

namespace lgir {

using nlohmann::json;

namespace {

template <typename Enum, std::size_t N>
Enum lookup(const std::pair<Enum, std::string_view> (&table)[N], std::string_view name,
            ErrorCode code, std::string_view what) {
    for (const auto& [value, label] : table) {
        if (label == name) return value;
    }
    throw Error(code, "unknown " + std::string(what) + ": '" + std::string(name) + "'");
}

template <typename Enum, std::size_t N>
std::string_view label_of(const std::pair<Enum, std::string_view> (&table)[N], Enum value) {
    for (const auto& [v, label] : table) {
        if (v == value) return label;
    }
    return "?";
}

constexpr std::pair<QueryKind, std::string_view> kQueryKinds[] = {
    {QueryKind::TIR, "TIR"}, {QueryKind::CIR, "CIR"}, {QueryKind::ChatIR, "ChatIR"}};

constexpr std::pair<InstructionKind, std::string_view> kInstructionKinds[] = {
    {InstructionKind::Addition, "Addition"},
    {InstructionKind::Removal, "Removal"},
    {InstructionKind::Modification, "Modification"},
    {InstructionKind::Comparison, "Comparison"},
    {InstructionKind::Retention, "Retention"}};

constexpr std::pair<Stage, std::string_view> kStages[] = {
    {Stage::Stage1, "Stage1"}, {Stage::Stage2, "Stage2"}, {Stage::Stage3, "Stage3"}};

constexpr std::pair<Answer, std::string_view> kAnswers[] = {
    {Answer::Yes, "Yes"}, {Answer::No, "No"}, {Answer::Ambiguous, "Ambiguous"}};

constexpr std::pair<BackendRole, std::string_view> kRoles[] = {
    {BackendRole::Captioner, "captioner"},        {BackendRole::Reasoner, "reasoner"},
    {BackendRole::Verifier, "verifier"},          {BackendRole::Evaluator, "evaluator"},
    {BackendRole::TextEncoder, "text_encoder"},   {BackendRole::ImageEncoder, "image_encoder"}};

constexpr std::pair<ChatReference, std::string_view> kChatRefs[] = {
    {ChatReference::ComprehensiveSynthesis, "comprehensive_synthesis"},
    {ChatReference::Top1Caption, "top1_caption"}};

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string_view to_string(QueryKind kind) { return label_of(kQueryKinds, kind); }
std::string_view to_string(InstructionKind kind) { return label_of(kInstructionKinds, kind); }
std::string_view to_string(Stage stage) { return label_of(kStages, stage); }
std::string_view to_string(Answer answer) { return label_of(kAnswers, answer); }
std::string_view to_string(BackendRole role) { return label_of(kRoles, role); }
std::string_view to_string(ChatReference ref) { return label_of(kChatRefs, ref); }

QueryKind query_kind_from_string(std::string_view name) {
    for (const auto& [value, label] : kQueryKinds) {
        if (text::iequals(label, name)) return value;
    }
    if (text::iequals(name, "chat") || text::iequals(name, "chat-ir") ||
        text::iequals(name, "chatir")) {
        return QueryKind::ChatIR;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown query kind: '" + std::string(name) + "'");
}

InstructionKind instruction_kind_from_string(std::string_view name) {
    const auto key = text::normalize_key(name);
    for (const auto& [value, label] : kInstructionKinds) {
        if (text::normalize_key(label) == key) return value;
    }
    throw Error(ErrorCode::ParseError, "unknown instruction type: '" + std::string(name) + "'");
}

Stage stage_from_string(std::string_view name) {
    return lookup(kStages, name, ErrorCode::InvalidArgument, "stage");
}

Answer answer_from_string(std::string_view name) {
    return lookup(kAnswers, name, ErrorCode::InvalidArgument, "answer");
}

BackendRole backend_role_from_string(std::string_view name) {
    const auto key = text::normalize_key(name);
    for (const auto& [value, label] : kRoles) {
        if (text::normalize_key(label) == key) return value;
    }
    throw Error(ErrorCode::ConfigError, "unknown backend role: '" + std::string(name) + "'");
}

ChatReference chat_reference_from_string(std::string_view name) {
    return lookup(kChatRefs, name, ErrorCode::ConfigError, "chat_ref");
}

ImageRecord make_image_record(std::string id, std::string uri, std::span<const std::uint8_t> bytes) {
    return ImageRecord{std::move(id), std::move(uri), sha256_hex(bytes), std::nullopt};
}

Embedding Embedding::unit(std::vector<float> raw) {
    if (raw.empty()) throw Error(ErrorCode::InvalidArgument, "empty embedding");
    double sq = 0.0;
    for (float x : raw) {
        if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite embedding entry");
        sq += static_cast<double>(x) * static_cast<double>(x);
    }
    if (sq == 0.0) throw Error(ErrorCode::InvalidArgument, "zero-norm embedding");
    const double inv = 1.0 / std::sqrt(sq);
    for (float& x : raw) x = static_cast<float>(static_cast<double>(x) * inv);
    Embedding e;
    e.dim = raw.size();
    e.values = std::move(raw);
    e.normalized = true;
    return e;
}

void Embedding::validate() const {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
    if (values.size() != dim) {
        throw Error(ErrorCode::DimensionMismatch, "embedding length " + std::to_string(values.size()) +
                                                      " != dim " + std::to_string(dim));
    }
    double sq = 0.0;
    for (float x : values) {
        if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite embedding entry");
        sq += static_cast<double>(x) * static_cast<double>(x);
    }
    if (normalized && std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidArgument, "embedding flagged normalized but has norm " +
                                                    std::to_string(std::sqrt(sq)));
    }
}

std::optional<ErrorCode> validate_query(const RetrievalQuery& query) {
    if (text::is_blank(query.text)) return ErrorCode::EmptyText;
    switch (query.kind) {
        case QueryKind::CIR:
            if (!query.reference_image) return ErrorCode::MissingReference;
            break;
        case QueryKind::TIR:
            if (query.reference_image) return ErrorCode::UnexpectedReference;
            break;
        case QueryKind::ChatIR:
            break;
    }
    return std::nullopt;
}

void require_valid(const RetrievalQuery& query) {
    if (auto code = validate_query(query)) {
        std::string message;
        switch (*code) {
            case ErrorCode::EmptyText: message = "query text is empty"; break;
            case ErrorCode::MissingReference: message = "CIR query requires a reference image"; break;
            case ErrorCode::UnexpectedReference: message = "TIR query must not carry a reference image"; break;
            default: message = "invalid query"; break;
        }
        throw Error(*code, message, "validate");
    }
}

namespace {

bool stage1_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.stage1_score != b.stage1_score) return a.stage1_score > b.stage1_score;
    return a.stage1_rank < b.stage1_rank;
}

std::optional<std::string> check_stage2_order(std::span<const RankedEntry> entries) {
    std::size_t verified = 0;
    while (verified < entries.size() && entries[verified].stage2_count) ++verified;
    for (std::size_t i = verified; i < entries.size(); ++i) {
        if (entries[i].stage2_count) return "verified entries do not form a prefix";
    }
    for (std::size_t i = 1; i < verified; ++i) {
        const auto& a = entries[i - 1];
        const auto& b = entries[i];
        const bool ok = *a.stage2_count > *b.stage2_count ||
                        (*a.stage2_count == *b.stage2_count && a.stage1_rank < b.stage1_rank);
        if (!ok) return "stage2 block not ordered at position " + std::to_string(i);
    }
    for (std::size_t i = verified + 1; i < entries.size(); ++i) {
        if (entries[i - 1].stage1_rank >= entries[i].stage1_rank) {
            return "unverified tail not in stage1 order at position " + std::to_string(i);
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> check_ranked_list(const RankedList& list) {
    const auto& entries = list.entries;
    const int n = static_cast<int>(entries.size());
    std::vector<bool> seen(entries.size() + 1, false);
    std::set<std::string> ids;
    const int m = static_cast<int>(list.trace.propositions.size());
    for (const auto& e : entries) {
        if (e.stage1_rank < 1 || e.stage1_rank > n) return "stage1_rank out of range";
        if (seen[static_cast<std::size_t>(e.stage1_rank)]) return "duplicate stage1_rank";
        seen[static_cast<std::size_t>(e.stage1_rank)] = true;
        if (!ids.insert(e.image_id).second) return "duplicate image id " + e.image_id;
        if (e.stage2_count) {
            if (*e.stage2_count < kVerificationFailed) return "negative stage2_count";
            if (*e.stage2_count > m) return "stage2_count exceeds proposition count";
        }
    }

    switch (list.stage) {
        case Stage::Stage1:
            for (int i = 1; i < n; ++i) {
                if (!stage1_before(entries[i - 1], entries[i])) {
                    return "stage1 order violated at position " + std::to_string(i);
                }
            }
            return std::nullopt;
        case Stage::Stage2:
            return check_stage2_order(entries);
        case Stage::Stage3: {
            std::vector<RankedEntry> rest;
            int accepted = 0;
            for (int i = 0; i < n; ++i) {
                if (entries[i].stage3_flag.value_or(false)) {
                    ++accepted;
                    if (i != 0) return "accepted candidate is not at the top";
                    continue;
                }
                rest.push_back(entries[i]);
            }
            if (accepted > 1) return "more than one accepted candidate";
            return check_stage2_order(rest);
        }
    }
    return std::nullopt;
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
    if (!std::isfinite(tau) || tau < 0.0 || tau > 1.0) fail("tau must lie in [0, 1]");
    if (k_verify < 1) fail("k_verify must be positive");
    if (alpha_evaluate < 1) fail("alpha_evaluate must be positive");
    if (alpha_evaluate > k_verify) fail("alpha_evaluate must not exceed k_verify");
    if (!std::isfinite(temperature) || temperature < 0.0) fail("temperature must be non-negative");
    if (!std::isfinite(top_p) || top_p <= 0.0 || top_p > 1.0) fail("top_p must lie in (0, 1]");
    if (max_tokens < 1) fail("max_tokens must be positive");
    if (response_top_k < 1) fail("response_top_k must be positive");
}

// --- JSON -------------------------------------------------------------------

void to_json(json& j, QueryKind v) { j = to_string(v); }
void from_json(const json& j, QueryKind& v) { v = query_kind_from_string(j.get<std::string>()); }
void to_json(json& j, InstructionKind v) { j = to_string(v); }
void from_json(const json& j, InstructionKind& v) {
    v = instruction_kind_from_string(j.get<std::string>());
}
void to_json(json& j, Stage v) { j = to_string(v); }
void from_json(const json& j, Stage& v) { v = stage_from_string(j.get<std::string>()); }
void to_json(json& j, Answer v) { j = to_string(v); }
void from_json(const json& j, Answer& v) { v = answer_from_string(j.get<std::string>()); }

void to_json(json& j, const ImageRecord& v) {
    j = json{{"id", v.id}, {"uri", v.uri}, {"content_hash", v.content_hash},
             {"caption", optional_json(v.caption)}};
}
void from_json(const json& j, ImageRecord& v) {
    v.id = j.at("id").get<std::string>();
    v.uri = j.value("uri", std::string{});
    v.content_hash = j.value("content_hash", std::string{});
    v.caption = optional_field<std::string>(j, "caption");
}

void to_json(json& j, const Embedding& v) {
    j = json{{"values", v.values}, {"dim", v.dim}, {"normalized", v.normalized}};
}
void from_json(const json& j, Embedding& v) {
    v.values = j.at("values").get<std::vector<float>>();
    v.dim = j.value("dim", v.values.size());
    v.normalized = j.value("normalized", false);
}

void to_json(json& j, const RetrievalQuery& v) {
    j = json{{"kind", v.kind}, {"text", v.text},
             {"reference_image", optional_json(v.reference_image)}, {"dialog", v.dialog}};
}
void from_json(const json& j, RetrievalQuery& v) {
    v.kind = j.at("kind").get<QueryKind>();
    v.text = j.value("text", std::string{});
    v.reference_image = optional_field<ImageRecord>(j, "reference_image");
    v.dialog = j.value("dialog", std::vector<std::string>{});
}

void to_json(json& j, const AtomicInstruction& v) { j = json{{"kind", v.kind}, {"text", v.text}}; }
void from_json(const json& j, AtomicInstruction& v) {
    v.kind = j.at("kind").get<InstructionKind>();
    v.text = j.at("text").get<std::string>();
}

void to_json(json& j, const TargetDescriptions& v) {
    j = json{{"core_elements", v.core_elements},
             {"enhanced_details", v.enhanced_details},
             {"comprehensive_synthesis", v.comprehensive_synthesis}};
}
void from_json(const json& j, TargetDescriptions& v) {
    v.core_elements = j.at("core_elements").get<std::string>();
    v.enhanced_details = j.at("enhanced_details").get<std::string>();
    v.comprehensive_synthesis = j.at("comprehensive_synthesis").get<std::string>();
}

void to_json(json& j, const Proposition& v) {
    j = json{{"statement", v.statement}, {"question", v.question}, {"truth_value", v.truth_value}};
}
void from_json(const json& j, Proposition& v) {
    v.statement = j.value("statement", std::string{});
    v.question = j.at("question").get<std::string>();
    v.truth_value = j.at("truth_value").get<bool>();
}

void to_json(json& j, const VerificationMatrix& v) {
    j = json{{"candidate_ids", v.candidate_ids},
             {"propositions", v.propositions},
             {"answers", v.answers},
             {"counts", v.counts}};
}
void from_json(const json& j, VerificationMatrix& v) {
    v.candidate_ids = j.at("candidate_ids").get<std::vector<std::string>>();
    v.propositions = j.at("propositions").get<std::vector<Proposition>>();
    v.answers = j.at("answers").get<std::vector<std::vector<Answer>>>();
    v.counts = j.at("counts").get<std::vector<int>>();
}

void to_json(json& j, const EvaluatorVerdict& v) {
    j = json{{"image_id", v.image_id}, {"accepted", v.accepted}, {"justification", v.justification}};
}
void from_json(const json& j, EvaluatorVerdict& v) {
    v.image_id = j.at("image_id").get<std::string>();
    v.accepted = j.at("accepted").get<bool>();
    v.justification = j.value("justification", std::string{});
}

void to_json(json& j, const StageTrace& v) {
    j = json{{"atomic_instructions", v.atomic_instructions},
             {"descriptions", v.descriptions},
             {"propositions", v.propositions},
             {"evaluator_verdicts", v.evaluator_verdicts},
             {"verification", optional_json(v.verification)},
             {"notes", v.notes}};
}
void from_json(const json& j, StageTrace& v) {
    v.atomic_instructions = j.value("atomic_instructions", std::vector<AtomicInstruction>{});
    v.descriptions = j.value("descriptions", TargetDescriptions{});
    v.propositions = j.value("propositions", std::vector<Proposition>{});
    v.evaluator_verdicts = j.value("evaluator_verdicts", std::vector<EvaluatorVerdict>{});
    v.verification = optional_field<VerificationMatrix>(j, "verification");
    v.notes = j.value("notes", std::vector<std::string>{});
}

void to_json(json& j, const RankedEntry& v) {
    j = json{{"image_id", v.image_id},
             {"stage1_score", v.stage1_score},
             {"stage2_count", optional_json(v.stage2_count)},
             {"stage3_flag", optional_json(v.stage3_flag)},
             {"stage1_rank", v.stage1_rank}};
}
void from_json(const json& j, RankedEntry& v) {
    v.image_id = j.at("image_id").get<std::string>();
    v.stage1_score = j.at("stage1_score").get<double>();
    v.stage2_count = optional_field<int>(j, "stage2_count");
    v.stage3_flag = optional_field<bool>(j, "stage3_flag");
    v.stage1_rank = j.at("stage1_rank").get<int>();
}

void to_json(json& j, const RankedList& v) {
    j = json{{"entries", v.entries}, {"stage", v.stage}, {"trace", v.trace}};
}
void from_json(const json& j, RankedList& v) {
    v.entries = j.at("entries").get<std::vector<RankedEntry>>();
    v.stage = j.at("stage").get<Stage>();
    v.trace = j.value("trace", StageTrace{});
}

void to_json(json& j, const PipelineConfig& v) {
    json endpoints = json::object();
    for (const auto& [role, url] : v.endpoints) endpoints[std::string(to_string(role))] = url;
    j = json{{"tau", v.tau},
             {"k_verify", v.k_verify},
             {"alpha_evaluate", v.alpha_evaluate},
             {"temperature", v.temperature},
             {"top_p", v.top_p},
             {"max_tokens", v.max_tokens},
             {"response_top_k", v.response_top_k},
             {"chat_ref", to_string(v.chat_ref)},
             {"endpoints", endpoints}};
}
void from_json(const json& j, PipelineConfig& v) {
    PipelineConfig d;
    v.tau = j.value("tau", d.tau);
    v.k_verify = j.value("k_verify", d.k_verify);
    v.alpha_evaluate = j.value("alpha_evaluate", d.alpha_evaluate);
    v.temperature = j.value("temperature", d.temperature);
    v.top_p = j.value("top_p", d.top_p);
    v.max_tokens = j.value("max_tokens", d.max_tokens);
    v.response_top_k = j.value("response_top_k", d.response_top_k);
    v.chat_ref = chat_reference_from_string(
        j.value("chat_ref", std::string(to_string(d.chat_ref))));
    v.endpoints.clear();
    if (auto it = j.find("endpoints"); it != j.end() && it->is_object()) {
        for (const auto& [role, url] : it->items()) {
            v.endpoints[backend_role_from_string(role)] = url.get<std::string>();
        }
    }
}

}  // namespace lgir
