#include "lgir/gateway.hpp"

#include <spdlog/spdlog.h>

#include <thread>

namespace lgir {

using nlohmann::json;

namespace {

std::size_t index_of(BackendRole role) { return static_cast<std::size_t>(role); }

json image_to_wire(const ImagePart& img) {
    json part{{"type", "image"}};
    if (!img.bytes.empty()) {
        part["base64"] = base64_encode(img.bytes);
        part["mime_type"] = img.mime_type.empty() ? sniff_mime_type(img.bytes) : img.mime_type;
    } else {
        part["uri"] = img.uri;
        if (!img.mime_type.empty()) part["mime_type"] = img.mime_type;
    }
    return part;
}

ImagePart image_from_wire(const json& part) {
    ImagePart img;
    if (auto it = part.find("base64"); it != part.end()) img.bytes = base64_decode(it->get<std::string>());
    img.uri = part.value("uri", std::string{});
    img.mime_type = part.value("mime_type", std::string{});
    return img;
}

}  // namespace

std::size_t ChatRequest::image_count() const {
    std::size_t n = 0;
    for (const auto& m : messages) {
        for (const auto& p : m.parts) n += p.kind == ContentPart::Kind::Image ? 1 : 0;
    }
    return n;
}

std::string ChatRequest::joined_text() const {
    std::string out;
    for (const auto& m : messages) {
        for (const auto& p : m.parts) {
            if (p.kind != ContentPart::Kind::Text) continue;
            if (!out.empty()) out += "\n\n";
            out += p.text;
        }
    }
    return out;
}

bool ChatRequest::has_system_message() const {
    for (const auto& m : messages) {
        if (m.role == MessageRole::System) return true;
    }
    return false;
}

json chat_request_to_wire(const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        json content = json::array();
        for (const auto& p : m.parts) {
            if (p.kind == ContentPart::Kind::Text) {
                content.push_back({{"type", "text"}, {"text", p.text}});
            } else {
                content.push_back(image_to_wire(p.image));
            }
        }
        messages.push_back({{"role", m.role == MessageRole::System ? "system" : "user"},
                            {"content", std::move(content)}});
    }
    json j{{"messages", std::move(messages)},
           {"temperature", req.temperature},
           {"top_p", req.top_p},
           {"max_tokens", req.max_tokens}};
    if (!req.model.empty()) j["model"] = req.model;
    return j;
}

ChatRequest chat_request_from_wire(const json& j) {
    ChatRequest req;
    req.temperature = j.value("temperature", 0.0);
    req.top_p = j.value("top_p", 1.0);
    req.max_tokens = j.value("max_tokens", 1024);
    req.model = j.value("model", std::string{});
    for (const auto& m : j.at("messages")) {
        ChatMessage msg;
        msg.role = m.value("role", std::string("user")) == "system" ? MessageRole::System
                                                                     : MessageRole::User;
        const auto& content = m.at("content");
        if (content.is_string()) {
            msg.parts.push_back(ContentPart::of_text(content.get<std::string>()));
        } else {
            for (const auto& p : content) {
                if (p.value("type", std::string("text")) == "image") {
                    msg.parts.push_back(ContentPart::of_image(image_from_wire(p)));
                } else {
                    msg.parts.push_back(ContentPart::of_text(p.value("text", std::string{})));
                }
            }
        }
        req.messages.push_back(std::move(msg));
    }
    return req;
}

json embed_request_to_wire(const EmbedRequest& req) {
    if (req.modality == Modality::Text) return json{{"modality", "text"}, {"input", req.text}};
    json j{{"modality", "image"}};
    if (!req.image.bytes.empty()) {
        j["input"] = base64_encode(req.image.bytes);
    } else {
        j["input"] = nullptr;
        j["uri"] = req.image.uri;
    }
    return j;
}

EmbedRequest embed_request_from_wire(const json& j) {
    EmbedRequest req;
    const auto modality = j.at("modality").get<std::string>();
    if (modality == "text") {
        req.modality = Modality::Text;
        req.text = j.at("input").get<std::string>();
    } else if (modality == "image") {
        req.modality = Modality::Image;
        if (auto it = j.find("input"); it != j.end() && it->is_string()) {
            req.image.bytes = base64_decode(it->get<std::string>());
        }
        req.image.uri = j.value("uri", std::string{});
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown modality '" + modality + "'");
    }
    return req;
}

std::string request_digest(BackendRole role, const ChatRequest& req) {
    json canonical = chat_request_to_wire(req);
    for (auto& m : canonical["messages"]) {
        for (auto& p : m["content"]) {
            if (auto it = p.find("base64"); it != p.end()) {
                p["sha256"] = sha256_hex(base64_decode(it->get<std::string>()));
                p.erase("base64");
            }
        }
    }
    canonical["role"] = to_string(role);
    return sha256_hex(canonical.dump());
}

void to_json(json& j, const GatewayOptions& v) {
    j = json{{"max_retries", v.max_retries},
             {"backoff_base_ms", v.backoff_base_ms},
             {"timeout_ms", v.timeout_ms},
             {"per_role_concurrency", v.per_role_concurrency},
             {"expected_dim", v.expected_dim ? json(*v.expected_dim) : json(nullptr)}};
}

void from_json(const json& j, GatewayOptions& v) {
    GatewayOptions d;
    v.max_retries = j.value("max_retries", d.max_retries);
    v.backoff_base_ms = j.value("backoff_base_ms", d.backoff_base_ms);
    v.timeout_ms = j.value("timeout_ms", d.timeout_ms);
    v.per_role_concurrency = j.value("per_role_concurrency", d.per_role_concurrency);
    if (auto it = j.find("expected_dim"); it != j.end() && !it->is_null()) {
        v.expected_dim = it->get<std::size_t>();
    } else {
        v.expected_dim.reset();
    }
    if (v.max_retries < 0) throw Error(ErrorCode::ConfigError, "max_retries must be >= 0");
    if (v.timeout_ms < 1) throw Error(ErrorCode::ConfigError, "timeout_ms must be positive");
}

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)), dim_(options_.expected_dim) {}

void Gateway::bind(BackendRole role, std::shared_ptr<Backend> backend) {
    auto& s = slots_[index_of(role)];
    s.backend = std::move(backend);
    s.limit = std::make_unique<Semaphore>(options_.per_role_concurrency);
}

bool Gateway::has(BackendRole role) const { return slots_[index_of(role)].backend != nullptr; }

std::shared_ptr<Backend> Gateway::backend(BackendRole role) const {
    return slots_[index_of(role)].backend;
}

Gateway::Slot& Gateway::slot(BackendRole role) {
    auto& s = slots_[index_of(role)];
    if (!s.backend) {
        throw Error(ErrorCode::BackendUnavailable,
                    "no backend configured for role " + std::string(to_string(role)));
    }
    return s;
}

template <typename Fn>
auto Gateway::with_retries(BackendRole role, Fn&& fn) -> decltype(fn(std::declval<Backend&>())) {
    auto& s = slot(role);
    calls_[index_of(role)].fetch_add(1);
    SemaphoreGuard guard(*s.limit);
    for (int attempt = 0;; ++attempt) {
        attempts_[index_of(role)].fetch_add(1);
        try {
            return fn(*s.backend);
        } catch (const Error& e) {
            if (!e.transient() || attempt >= options_.max_retries) throw;
            const auto delay = std::chrono::milliseconds(
                static_cast<std::int64_t>(options_.backoff_base_ms) << attempt);
            spdlog::warn("{} call failed ({}), retry {}/{} in {} ms", to_string(role),
                         e.what(), attempt + 1, options_.max_retries, delay.count());
            std::this_thread::sleep_for(delay);
        }
    }
}

ChatResponse Gateway::complete(BackendRole role, const ChatRequest& req) {
    if (role == BackendRole::TextEncoder || role == BackendRole::ImageEncoder) {
        throw Error(ErrorCode::InvalidArgument, "encoder roles do not take chat requests");
    }
    if (req.image_count() > kMaxImagesPerRequest) {
        throw Error(ErrorCode::InvalidArgument, "at most two image attachments per request");
    }
    return with_retries(role, [&](Backend& b) {
        const auto start = std::chrono::steady_clock::now();
        auto resp = b.complete(role, req);
        resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
        if (resp.backend_id.empty()) resp.backend_id = b.id();
        return resp;
    });
}

void Gateway::check_dim(std::size_t got) {
    std::lock_guard lock(dim_mutex_);
    if (!dim_) {
        dim_ = got;
        return;
    }
    if (*dim_ != got) {
        throw Error(ErrorCode::DimensionMismatch, "encoder returned dimension " + std::to_string(got) +
                                                      ", expected " + std::to_string(*dim_));
    }
}

Embedding Gateway::embed(BackendRole role, const EmbedRequest& req) {
    if (role != BackendRole::TextEncoder && role != BackendRole::ImageEncoder) {
        throw Error(ErrorCode::InvalidArgument, "embed requires an encoder role");
    }
    if (req.modality == Modality::Text ? req.text.empty()
                                       : (req.image.bytes.empty() && req.image.uri.empty())) {
        throw Error(ErrorCode::InvalidArgument, "empty embedding payload");
    }
    auto raw = with_retries(role, [&](Backend& b) { return b.embed(role, req); });
    if (raw.empty()) throw Error(ErrorCode::MalformedResponse, "encoder returned an empty vector");
    check_dim(raw.size());
    try {
        return Embedding::unit(std::move(raw));
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedResponse, e.what());
    }
}

Embedding Gateway::embed_text(std::string_view text) {
    EmbedRequest req;
    req.modality = Modality::Text;
    req.text = std::string(text);
    return embed(BackendRole::TextEncoder, req);
}

Embedding Gateway::embed_image(const ImagePart& image) {
    EmbedRequest req;
    req.modality = Modality::Image;
    req.image = image;
    return embed(BackendRole::ImageEncoder, req);
}

std::size_t Gateway::call_count(BackendRole role) const { return calls_[index_of(role)].load(); }

std::size_t Gateway::attempt_count(BackendRole role) const {
    return attempts_[index_of(role)].load();
}

void Gateway::reset_counters() {
    for (auto& c : calls_) c.store(0);
    for (auto& a : attempts_) a.store(0);
}

std::map<BackendRole, bool> Gateway::health() {
    std::map<BackendRole, bool> out;
    for (auto role : kAllRoles) {
        auto& s = slots_[index_of(role)];
        bool ok = false;
        if (s.backend) {
            try {
                ok = s.backend->reachable();
            } catch (...) {
                ok = false;
            }
        }
        out[role] = ok;
    }
    return out;
}

std::optional<std::size_t> Gateway::dim() const {
    std::lock_guard lock(dim_mutex_);
    return dim_;
}

}  // namespace lgir
