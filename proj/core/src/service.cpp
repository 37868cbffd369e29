#include "lgir/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "lgir/text.hpp"

namespace lgir {

using nlohmann::json;

namespace {

struct IngestGuard {
    std::atomic<bool>& flag;
    ~IngestGuard() { flag.store(false); }
};

std::string index_id(const EmbeddingIndex& index) { return sha256_hex(serialize_index(index)).substr(0, 16); }

json ranking_payload(const RankedList& ranking, std::size_t keep) {
    json entries = json::array();
    for (std::size_t i = 0; i < std::min(keep, ranking.entries.size()); ++i) entries.push_back(ranking.entries[i]);
    return json{{"stage", ranking.stage}, {"entries", std::move(entries)}, {"total", ranking.entries.size()}};
}

bool looks_like_path(std::string_view s) {
    return s.find('/') != std::string_view::npos || s.find("://") != std::string_view::npos ||
           s.find('.') != std::string_view::npos;
}

// The optional reference image of a query body: an index id, a path/URI,
// base64 (optionally as a data: URL) or an object with one of those keys.
std::optional<std::pair<ImageRecord, ImagePart>> resolve_reference(const json& value, const EmbeddingIndex& index,
                                                                   const ImageSource& images) {
    if (value.is_null()) return std::nullopt;
    std::string id, uri, b64;
    if (value.is_object()) {
        id = value.value("id", std::string{});
        uri = value.value("uri", std::string{});
        b64 = value.value("base64", std::string{});
    } else if (value.is_string()) {
        const auto s = value.get<std::string>();
        if (s.starts_with("data:")) {
            const auto comma = s.find(',');
            b64 = comma == std::string::npos ? std::string{} : s.substr(comma + 1);
        } else if (index.position(s)) {
            id = s;
        } else if (looks_like_path(s)) {
            uri = s;
        } else {
            b64 = s;
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, "reference_image must be a string or an object", "validate");
    }

    if (!id.empty()) {
        const auto& rec = index.record(id);
        return std::make_pair(rec, image_part(rec, images));
    }
    if (!uri.empty()) {
        auto bytes = images.read(uri);
        auto rec = make_image_record("ref:" + sha256_hex(bytes).substr(0, 12), uri, bytes);
        auto mime = sniff_mime_type(bytes);
        return std::make_pair(rec, ImagePart{std::move(bytes), uri, std::move(mime)});
    }
    if (b64.empty()) throw Error(ErrorCode::InvalidArgument, "reference_image is empty", "validate");
    auto bytes = base64_decode(b64);
    if (bytes.empty()) throw Error(ErrorCode::InvalidArgument, "reference_image decodes to nothing", "validate");
    auto rec = make_image_record("upload:" + sha256_hex(bytes).substr(0, 12), "", bytes);
    auto mime = sniff_mime_type(bytes);
    return std::make_pair(rec, ImagePart{std::move(bytes), "", std::move(mime)});
}

template <typename Fn>
ServiceReply guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        spdlog::warn("request failed: {} {}", to_string(e.code()), e.what());
        return {http_status_for(e.code()), error_body(e)};
    } catch (const json::exception& e) {
        return {400, {{"code", "InvalidArgument"}, {"message", e.what()}, {"stage", nullptr}}};
    }
}

}  // namespace

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingReference:
        case ErrorCode::UnexpectedReference:
        case ErrorCode::EmptyText:
        case ErrorCode::InvalidArgument:
        case ErrorCode::ConfigError:
        case ErrorCode::MissingSubset:
        case ErrorCode::EmptyDecomposition:
            return 422;
        case ErrorCode::SessionNotFound:
        case ErrorCode::NotFound:
            return 404;
        case ErrorCode::IngestInProgress:
            return 409;
        case ErrorCode::BackendUnavailable:
        case ErrorCode::Timeout:
            return 503;
        case ErrorCode::ParseError:
        case ErrorCode::MalformedResponse:
        case ErrorCode::AmbiguousAnswer:
            return 502;
        case ErrorCode::TemplateError:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::CorruptIndex:
            return 500;
    }
    return 500;
}

json error_body(const Error& e) {
    return json{{"code", to_string(e.code())},
                {"message", e.what()},
                {"stage", e.stage().empty() ? json(nullptr) : json(e.stage())}};
}

Service::Service(Gateway& gateway, ResultCache& cache, std::shared_ptr<const ImageSource> images,
                 SessionStore& sessions, PipelineConfig config, std::shared_ptr<const EmbeddingIndex> index,
                 std::size_t workers)
    : gateway_(gateway),
      cache_(cache),
      images_(std::move(images)),
      sessions_(sessions),
      config_(std::move(config)),
      workers_(workers),
      index_(std::move(index)) {
    config_.validate();
}

Service::~Service() { stop(); }

std::shared_ptr<const EmbeddingIndex> Service::index() const {
    std::lock_guard lock(index_mutex_);
    return index_;
}

void Service::swap_index(std::shared_ptr<const EmbeddingIndex> index) {
    std::lock_guard lock(index_mutex_);
    index_ = std::move(index);
}

EngineContext Service::context() const {
    return EngineContext{gateway_, cache_, *images_, config_, PromptLibrary::builtin(), workers_};
}

ServiceReply Service::post_index(const json& body) {
    return guarded([&]() -> ServiceReply {
        bool expected = false;
        if (!ingesting_.compare_exchange_strong(expected, true)) {
            throw Error(ErrorCode::IngestInProgress, "an ingest is already running", "ingest");
        }
        IngestGuard guard{ingesting_};

        std::vector<ManifestEntry> entries;
        if (auto it = body.find("manifest_path"); it != body.end() && it->is_string()) {
            const std::filesystem::path manifest = it->get<std::string>();
            entries = absolutize(read_manifest(manifest), manifest.parent_path());
        } else if (auto rec = body.find("records"); rec != body.end() && rec->is_array()) {
            for (const auto& r : *rec) entries.push_back({r.at("id").get<std::string>(), r.at("uri").get<std::string>()});
        } else {
            throw Error(ErrorCode::InvalidArgument, "body needs manifest_path or records[]", "ingest");
        }
        const ImageSource& source = *images_;
        IngestOptions opts;
        opts.sampling = sampling_from(config_);
        opts.workers = workers_;
        auto built = std::make_shared<const EmbeddingIndex>(ingest(entries, source, gateway_, cache_, opts));
        if (auto out = body.find("save_to"); out != body.end() && out->is_string()) {
            save_index(*built, out->get<std::string>());
        }
        const auto id = index_id(*built);
        const auto n = built->size();
        swap_index(std::move(built));
        return {200, {{"index_id", id}, {"n_images", n}}};
    });
}

ServiceReply Service::post_session(const json& body) {
    return guarded([&]() -> ServiceReply {
        const auto kind = body.is_object() && body.contains("kind") ? body["kind"].get<QueryKind>() : QueryKind::ChatIR;
        const auto s = sessions_.create(kind);
        return {201, {{"session_id", s.session_id}, {"kind", s.kind}}};
    });
}

ServiceReply Service::post_query(const std::string& session_id, const json& body) {
    return guarded([&]() -> ServiceReply {
        std::lock_guard session_lock(sessions_.lock_for(session_id));
        auto session = sessions_.load(session_id);
        const auto index = this->index();
        if (!index || index->empty()) throw Error(ErrorCode::NotFound, "no index loaded", "query");
        if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "query body must be an object", "validate");

        RetrievalQuery q;
        q.kind = session.kind;
        q.text = body.value("text", std::string{});
        std::optional<ImagePart> reference;
        if (auto it = body.find("reference_image"); it != body.end()) {
            if (auto ref = resolve_reference(*it, *index, *images_)) {
                q.reference_image = ref->first;
                reference = ref->second;
            }
        }
        const auto stages = body.value("stages", 3);
        if (stages < 1 || stages > 3) throw Error(ErrorCode::InvalidArgument, "stages must be 1, 2 or 3", "validate");

        const auto ctx = context();
        const auto result = run_query(q, *index, ctx, static_cast<Stage>(stages), &session, reference);
        sessions_.save(session);
        return {200,
                {{"session_id", session.session_id},
                 {"round", session.rounds.size()},
                 {"instruction", result.adapted.instruction},
                 {"ref_desc", result.adapted.ref_desc},
                 {"ranking", ranking_payload(result.output.ranking, static_cast<std::size_t>(config_.response_top_k))},
                 {"trace", result.output.ranking.trace}}};
    });
}

ServiceReply Service::get_session(const std::string& session_id) {
    return guarded([&]() -> ServiceReply { return {200, json(sessions_.load(session_id))}; });
}

ServiceReply Service::get_health() {
    return guarded([&]() -> ServiceReply {
        json backends = json::object();
        for (const auto& [role, ok] : gateway_.health()) backends[std::string(to_string(role))] = ok;
        const auto index = this->index();
        return {200,
                {{"status", "ok"},
                 {"backends", std::move(backends)},
                 {"n_images", index ? index->size() : 0},
                 {"ingesting", ingesting_.load()}}};
    });
}

Service::ImageReply Service::get_image(const std::string& image_id) {
    const auto index = this->index();
    try {
        if (!index) throw Error(ErrorCode::NotFound, "no index loaded");
        const auto bytes = images_->read(index->record(image_id).uri);
        return {200, sniff_mime_type(bytes), to_string(bytes)};
    } catch (const Error& e) {
        return {http_status_for(e.code()), "application/json", error_body(e).dump()};
    }
}

void Service::install_routes() {
    auto& srv = *server_;
    auto send = [](httplib::Response& res, const ServiceReply& reply) {
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req) {
        if (text::is_blank(req.body)) return json::object();
        return json::parse(req.body);
    };
    auto with_body = [=](auto handler) {
        return [=](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = parse_body(req);
            } catch (const json::exception& e) {
                send(res, {400, {{"code", "InvalidArgument"}, {"message", e.what()}, {"stage", nullptr}}});
                return;
            }
            send(res, handler(req, body));
        };
    };

    srv.Post("/v1/index", with_body([this](const httplib::Request&, const json& b) { return post_index(b); }));
    srv.Post("/v1/sessions", with_body([this](const httplib::Request&, const json& b) { return post_session(b); }));
    srv.Post(R"(/v1/sessions/([A-Za-z0-9_\-]+)/query)",
             with_body([this](const httplib::Request& req, const json& b) { return post_query(req.matches[1], b); }));
    srv.Get(R"(/v1/sessions/([A-Za-z0-9_\-]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_session(req.matches[1]));
    });
    srv.Get(R"(/v1/images/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto img = get_image(req.matches[1]);
        res.status = img.status;
        res.set_content(img.bytes, img.content_type);
    });
    srv.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_health()); });
}

int Service::start(const std::string& host, int port) {
    stop();
    server_ = std::make_unique<httplib::Server>();
    install_routes();
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        throw Error(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
    }
    if (bound < 0) throw Error(ErrorCode::ConfigError, "cannot bind " + host);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void Service::listen(const std::string& host, int port) {
    server_ = std::make_unique<httplib::Server>();
    install_routes();
    spdlog::info("serving on {}:{}", host, port);
    if (!server_->listen(host, port)) {
        throw Error(ErrorCode::ConfigError, "cannot listen on " + host + ":" + std::to_string(port));
    }
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    server_.reset();
}

}  // namespace lgir
