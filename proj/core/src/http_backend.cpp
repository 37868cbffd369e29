#include "lgir/http_backend.hpp"

#include <httplib.h>

namespace lgir {

using nlohmann::json;

HttpBackend::HttpBackend(std::string endpoint, HttpBackendOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
    while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
    const auto scheme = endpoint_.find("://");
    if (scheme == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "endpoint must include a scheme: '" + endpoint_ + "'");
    }
    const auto path = endpoint_.find('/', scheme + 3);
    origin_ = endpoint_.substr(0, path);
    base_path_ = path == std::string::npos ? std::string{} : endpoint_.substr(path);
}

json HttpBackend::post(const std::string& path, const json& body) {
    httplib::Client client(origin_);
    client.set_connection_timeout(std::chrono::milliseconds(options_.connect_timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options_.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(options_.timeout_ms));

    auto res = client.Post(base_path_ + path, body.dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const auto what = endpoint_ + path + ": " + httplib::to_string(err);
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
            throw Error(ErrorCode::Timeout, what);
        }
        throw Error(ErrorCode::BackendUnavailable, what);
    }
    if (res->status >= 500 || res->status == 429) {
        throw Error(ErrorCode::BackendUnavailable,
                    endpoint_ + path + ": HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::MalformedResponse,
                    endpoint_ + path + ": HTTP " + std::to_string(res->status) + " " + res->body);
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, endpoint_ + path + ": " + e.what());
    }
}

ChatResponse HttpBackend::complete(BackendRole, const ChatRequest& req) {
    auto body = chat_request_to_wire(req);
    if (!options_.model.empty() && !body.contains("model")) body["model"] = options_.model;
    const auto reply = post("/chat", body);
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
        throw Error(ErrorCode::MalformedResponse, endpoint_ + "/chat: reply lacks a 'text' string");
    }
    return ChatResponse{reply["text"].get<std::string>(), 0, id()};
}

std::vector<float> HttpBackend::embed(BackendRole, const EmbedRequest& req) {
    const auto reply = post("/embed", embed_request_to_wire(req));
    try {
        auto values = reply.at("values").get<std::vector<float>>();
        if (auto it = reply.find("dim"); it != reply.end() && it->get<std::size_t>() != values.size()) {
            throw Error(ErrorCode::DimensionMismatch, endpoint_ + "/embed: dim field disagrees with values");
        }
        return values;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, endpoint_ + "/embed: " + e.what());
    }
}

bool HttpBackend::reachable() {
    httplib::Client client(origin_);
    client.set_connection_timeout(std::chrono::milliseconds(options_.connect_timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(options_.connect_timeout_ms));
    auto res = client.Get(base_path_ + "/health");
    return static_cast<bool>(res);
}

}  // namespace lgir
