#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lgir/pipeline.hpp"

namespace lgir {

/// Reference description used when a query has no reference image.
inline constexpr std::string_view kBlankReference = "A blank image.";

struct AdaptedQuery {
    std::string instruction;
    std::string ref_desc;

    bool operator==(const AdaptedQuery&) const = default;
};

struct SessionRound {
    std::string user_text;
    std::string ref_desc;
    std::vector<AtomicInstruction> atomic_instructions;
    TargetDescriptions descriptions;
    /// Stage-1 order, truncated to the response size.
    std::vector<std::string> stage1_top;
    RankedList final_ranking;

    bool operator==(const SessionRound&) const = default;
};

struct Session {
    std::string session_id;
    QueryKind kind = QueryKind::ChatIR;
    std::vector<SessionRound> rounds;
    /// Text that stands in for the reference in the next Chat-IR round.
    std::string current_ref_desc;

    std::vector<std::string> dialog() const;
    bool operator==(const Session&) const = default;
};

void to_json(nlohmann::json& j, const SessionRound& v);
void from_json(const nlohmann::json& j, SessionRound& v);
void to_json(nlohmann::json& j, const Session& v);
void from_json(const nlohmann::json& j, Session& v);

/// Throws EmptyText for blank input.
AdaptedQuery adapt_tir(std::string_view text);
/// Captions the reference image (cached by content hash).
AdaptedQuery adapt_cir(std::string_view instruction, const ImageRecord& reference, const ImagePart& part,
                       const EngineContext& ctx);
AdaptedQuery adapt_chatir(const Session& session, std::string_view feedback);

/// Appends the round and moves current_ref_desc forward: the new
/// comprehensive synthesis, or the top-1 image caption with Top1Caption.
void record_round(Session& session, const std::string& user_text, const AdaptedQuery& adapted,
                  const PipelineOutput& output, const EmbeddingIndex& index, ChatReference mode,
                  std::size_t keep);

/// Sessions stored as <dir>/<session_id>.json. Without a directory they live
/// only in memory.
class SessionStore {
public:
    explicit SessionStore(std::optional<std::filesystem::path> dir = std::nullopt);

    Session create(QueryKind kind);
    /// Throws SessionNotFound.
    Session load(const std::string& session_id) const;
    void save(const Session& session);
    bool exists(const std::string& session_id) const;
    /// Serializes rounds within one session.
    std::mutex& lock_for(const std::string& session_id);

private:
    std::filesystem::path file_for(const std::string& session_id) const;

    std::optional<std::filesystem::path> dir_;
    mutable std::mutex mutex_;
    std::map<std::string, Session> memory_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

struct QueryResult {
    AdaptedQuery adapted;
    PipelineOutput output;
};

/// The one entry point shared by the CLI, the service and the harness.
/// TIR and CIR run directly. Chat-IR uses `session` when given (and records
/// the round in it); otherwise the query's dialog is replayed in a scratch
/// session first. `reference` overrides reading the reference image from
/// the image source.
QueryResult run_query(const RetrievalQuery& query, const EmbeddingIndex& index, const EngineContext& ctx,
                      Stage last = Stage::Stage3, Session* session = nullptr,
                      const std::optional<ImagePart>& reference = std::nullopt);

}  // namespace lgir
