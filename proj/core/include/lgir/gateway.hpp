#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgir/digest.hpp"
#include "lgir/parallel.hpp"
#include "lgir/types.hpp"

namespace lgir {

enum class MessageRole { System, User };

/// An image sent to a model: inline bytes, or a URI the backend can resolve.
struct ImagePart {
    Bytes bytes;
    std::string uri;
    std::string mime_type;

    bool operator==(const ImagePart&) const = default;
};

struct ContentPart {
    enum class Kind { Text, Image };
    Kind kind = Kind::Text;
    std::string text;
    ImagePart image;

    static ContentPart of_text(std::string t) { return {Kind::Text, std::move(t), {}}; }
    static ContentPart of_image(ImagePart img) { return {Kind::Image, {}, std::move(img)}; }

    bool operator==(const ContentPart&) const = default;
};

struct ChatMessage {
    MessageRole role = MessageRole::User;
    std::vector<ContentPart> parts;

    bool operator==(const ChatMessage&) const = default;
};

inline constexpr std::size_t kMaxImagesPerRequest = 2;

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 1024;
    std::string model;

    std::size_t image_count() const;
    /// All text parts, messages separated by blank lines.
    std::string joined_text() const;
    /// True when any system message is present.
    bool has_system_message() const;
};

struct ChatResponse {
    std::string text;
    std::int64_t latency_ms = 0;
    std::string backend_id;
};

enum class Modality { Text, Image };

struct EmbedRequest {
    Modality modality = Modality::Text;
    std::string text;
    ImagePart image;
};

/// Wire encoding shared by the HTTP backend and the mock server in tests.
nlohmann::json chat_request_to_wire(const ChatRequest& req);
ChatRequest chat_request_from_wire(const nlohmann::json& j);
nlohmann::json embed_request_to_wire(const EmbedRequest& req);
EmbedRequest embed_request_from_wire(const nlohmann::json& j);

/// SHA-256 over the role and a canonical encoding of the request in which
/// image bytes are replaced by their digest.
std::string request_digest(BackendRole role, const ChatRequest& req);

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual ChatResponse complete(BackendRole role, const ChatRequest& req) = 0;
    virtual std::vector<float> embed(BackendRole role, const EmbedRequest& req) = 0;
    virtual bool reachable() { return true; }
};

struct GatewayOptions {
    int max_retries = 2;
    int backoff_base_ms = 100;
    int timeout_ms = 120000;
    std::size_t per_role_concurrency = 8;
    /// When set, every embedding must have exactly this dimension.
    std::optional<std::size_t> expected_dim;

    bool operator==(const GatewayOptions&) const = default;
};

void to_json(nlohmann::json& j, const GatewayOptions& v);
void from_json(const nlohmann::json& j, GatewayOptions& v);

/// Routes each model call to the backend bound to its role, applying the
/// per-role concurrency cap, transient-failure retries with exponential
/// backoff, and the shared-dimension contract for encoders.
class Gateway {
public:
    explicit Gateway(GatewayOptions options = {});

    void bind(BackendRole role, std::shared_ptr<Backend> backend);
    bool has(BackendRole role) const;
    std::shared_ptr<Backend> backend(BackendRole role) const;

    ChatResponse complete(BackendRole role, const ChatRequest& req);

    Embedding embed(BackendRole role, const EmbedRequest& req);
    Embedding embed_text(std::string_view text);
    Embedding embed_image(const ImagePart& image);

    /// Logical calls issued per role (retries are not counted twice).
    std::size_t call_count(BackendRole role) const;
    std::size_t attempt_count(BackendRole role) const;
    void reset_counters();

    std::map<BackendRole, bool> health();
    std::optional<std::size_t> dim() const;
    const GatewayOptions& options() const { return options_; }

private:
    struct Slot {
        std::shared_ptr<Backend> backend;
        std::unique_ptr<Semaphore> limit;
    };

    template <typename Fn>
    auto with_retries(BackendRole role, Fn&& fn) -> decltype(fn(std::declval<Backend&>()));

    Slot& slot(BackendRole role);
    void check_dim(std::size_t got);

    GatewayOptions options_;
    std::array<Slot, 6> slots_;
    std::array<std::atomic<std::size_t>, 6> calls_{};
    std::array<std::atomic<std::size_t>, 6> attempts_{};
    mutable std::mutex dim_mutex_;
    std::optional<std::size_t> dim_;
};

}  // namespace lgir
