#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "lgir/adapters.hpp"

namespace httplib {
class Server;
}

namespace lgir {

struct ServiceReply {
    int status = 200;
    nlohmann::json body;
};

/// HTTP status for a structured error code.
int http_status_for(ErrorCode code);
nlohmann::json error_body(const Error& e);

/// The /v1 API over one gateway, cache, image source and session store.
/// Handlers are plain member functions so they can be exercised without a
/// socket; listen() wires them into an HTTP server.
class Service {
public:
    Service(Gateway& gateway, ResultCache& cache, std::shared_ptr<const ImageSource> images,
            SessionStore& sessions, PipelineConfig config, std::shared_ptr<const EmbeddingIndex> index,
            std::size_t workers = 8);
    ~Service();

    ServiceReply post_index(const nlohmann::json& body);
    ServiceReply post_session(const nlohmann::json& body);
    ServiceReply post_query(const std::string& session_id, const nlohmann::json& body);
    ServiceReply get_session(const std::string& session_id);
    ServiceReply get_health();
    /// Raw image bytes plus content type; status 404 when unknown.
    struct ImageReply {
        int status = 200;
        std::string content_type;
        std::string bytes;
    };
    ImageReply get_image(const std::string& image_id);

    std::shared_ptr<const EmbeddingIndex> index() const;
    void swap_index(std::shared_ptr<const EmbeddingIndex> index);

    /// Binds and serves on a background thread. Port 0 picks a free port;
    /// returns the bound port.
    int start(const std::string& host, int port);
    /// Blocks serving on the calling thread.
    void listen(const std::string& host, int port);
    void stop();

private:
    void install_routes();
    EngineContext context() const;

    Gateway& gateway_;
    ResultCache& cache_;
    std::shared_ptr<const ImageSource> images_;
    SessionStore& sessions_;
    PipelineConfig config_;
    std::size_t workers_;

    mutable std::mutex index_mutex_;
    std::shared_ptr<const EmbeddingIndex> index_;
    std::atomic<bool> ingesting_{false};

    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace lgir
