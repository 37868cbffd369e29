#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "lgir/gateway.hpp"

namespace lgir {

/// Deterministic in-process backend. Responses are a pure function of the
/// role and the request: scripted keys first, then a per-role responder,
/// then (for encoders only) hash-seeded vectors.
class MockBackend : public Backend {
public:
    using ChatResponder = std::function<std::string(const ChatRequest&)>;
    using EmbedResponder = std::function<std::vector<float>(const EmbedRequest&)>;

    struct Call {
        BackendRole role;
        std::string digest;
        std::string text;
        std::size_t images = 0;
    };

    explicit MockBackend(std::string id = "mock", std::size_t dim = 32);

    /// Reply `response` whenever `key` occurs in the request's match text
    /// (see mock_match_text). Earlier scripts win.
    void script(BackendRole role, std::string key, std::string response);
    void on_chat(BackendRole role, ChatResponder responder);
    void on_embed(BackendRole role, EmbedResponder responder);
    /// Every call for `role` throws Error(code) until cleared.
    void fail(BackendRole role, ErrorCode code);
    void clear_failure(BackendRole role);

    std::vector<Call> calls() const;
    std::size_t call_count(BackendRole role) const;
    void clear_calls();

    std::size_t dim() const { return dim_; }
    std::string id() const override { return id_; }
    ChatResponse complete(BackendRole role, const ChatRequest& req) override;
    std::vector<float> embed(BackendRole role, const EmbedRequest& req) override;

private:
    void record(BackendRole role, const ChatRequest* req, std::string text, std::size_t images);
    void maybe_fail(BackendRole role) const;

    std::string id_;
    std::size_t dim_;
    mutable std::mutex mutex_;
    std::vector<std::pair<BackendRole, std::pair<std::string, std::string>>> scripts_;
    std::map<BackendRole, ChatResponder> chat_;
    std::map<BackendRole, EmbedResponder> embed_;
    std::map<BackendRole, ErrorCode> failures_;
    std::vector<Call> calls_;
};

/// Text a scripted key is matched against: everything after the last
/// "Below is the query you need to solve:" marker, or the whole joined text.
std::string mock_match_text(const ChatRequest& req);

/// Unit vector seeded by SHA-256 of `seed`; identical seeds give identical vectors.
std::vector<float> hashed_unit_vector(std::string_view seed, std::size_t dim);
/// Normalized sum of hashed_unit_vector over lowercase alphanumeric tokens.
/// Falls back to hashed_unit_vector(text) when no token survives.
std::vector<float> hashed_bag_of_words(std::string_view text, std::size_t dim);

// Prompt introspection used by test doubles that play a model role.
struct MockQuery {
    std::string instruction;
    std::string reference;
    std::vector<AtomicInstruction> atomic_instructions;
};
MockQuery parse_mock_query(std::string_view prompt);
/// The quoted instruction of an evaluator prompt.
std::string evaluator_instruction(std::string_view prompt);

/// Deterministic stand-ins for all six roles. Captions come from file names;
/// the verifier and evaluator say Yes when every content word of the
/// question or instruction appears in the image's file name; encoders are
/// bag-of-words over those names.
std::shared_ptr<MockBackend> make_demo_mock(std::size_t dim = 64);

}  // namespace lgir
