#pragma once

#include <string>

#include "lgir/gateway.hpp"

namespace lgir {

struct HttpBackendOptions {
    int timeout_ms = 120000;
    int connect_timeout_ms = 5000;
    std::string model;
};

/// Client for the chat/embed JSON protocol:
///   POST {endpoint}/chat  {model?, messages[], temperature, top_p, max_tokens} -> {text}
///   POST {endpoint}/embed {modality, input}                                   -> {values[], dim}
class HttpBackend : public Backend {
public:
    explicit HttpBackend(std::string endpoint, HttpBackendOptions options = {});

    std::string id() const override { return "http:" + endpoint_; }
    ChatResponse complete(BackendRole role, const ChatRequest& req) override;
    std::vector<float> embed(BackendRole role, const EmbedRequest& req) override;
    bool reachable() override;

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    std::string endpoint_;
    std::string origin_;
    std::string base_path_;
    HttpBackendOptions options_;
};

}  // namespace lgir
