#include "lgir/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "lgir/http_backend.hpp"

namespace lgir {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "tau",       "k_verify",  "alpha_evaluate", "temperature", "top_p",      "max_tokens", "response_top_k",
    "chat_ref",  "endpoints", "models",         "gateway",     "prompt_dir", "state_dir",  "cache_file",
    "workers"};

std::optional<std::filesystem::path> optional_path(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return std::filesystem::path(it->get<std::string>());
}

}  // namespace

void AppConfig::validate() const {
    pipeline.validate();
    if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be at least 1");
    if (gateway.max_retries < 0) throw Error(ErrorCode::ConfigError, "gateway.max_retries must be >= 0");
    if (gateway.timeout_ms < 1) throw Error(ErrorCode::ConfigError, "gateway.timeout_ms must be positive");
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
}

std::string endpoint_env_var(BackendRole role) {
    std::string name(to_string(role));
    for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return "LGIR_BACKEND_" + name + "_URL";
}

AppConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!kKnownKeys.count(key)) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
    AppConfig c;
    try {
        c.pipeline = j.get<PipelineConfig>();
        if (auto it = j.find("gateway"); it != j.end()) c.gateway = it->get<GatewayOptions>();
        if (auto it = j.find("models"); it != j.end()) {
            for (const auto& [role, model] : it->items()) c.models[backend_role_from_string(role)] = model.get<std::string>();
        }
        c.prompt_dir = optional_path(j, "prompt_dir");
        c.state_dir = optional_path(j, "state_dir");
        c.cache_file = optional_path(j, "cache_file");
        c.workers = j.value("workers", c.workers);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad config value: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    c.validate();
    return c;
}

json config_to_json(const AppConfig& c) {
    json j = c.pipeline;
    j["gateway"] = c.gateway;
    json models = json::object();
    for (const auto& [role, model] : c.models) models[std::string(to_string(role))] = model;
    j["models"] = models;
    j["prompt_dir"] = c.prompt_dir ? json(c.prompt_dir->string()) : json(nullptr);
    j["state_dir"] = c.state_dir ? json(c.state_dir->string()) : json(nullptr);
    j["cache_file"] = c.cache_file ? json(c.cache_file->string()) : json(nullptr);
    j["workers"] = c.workers;
    return j;
}

void apply_env_overrides(AppConfig& config, const EnvLookup& env) {
    for (auto role : kAllRoles) {
        if (auto url = env(endpoint_env_var(role))) config.pipeline.endpoints[role] = *url;
    }
}

AppConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
    AppConfig config;
    if (path) {
        std::ifstream in(*path);
        if (!in) throw Error(ErrorCode::ConfigError, "config file not found: " + path->string());
        std::ostringstream ss;
        ss << in.rdbuf();
        auto j = json::parse(ss.str(), nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::ConfigError, "config file is not valid JSON: " + path->string());
        config = config_from_json(j);
    }
    apply_env_overrides(config, env);
    return config;
}

void bind_http_backends(Gateway& gateway, const AppConfig& config) {
    for (const auto& [role, url] : config.pipeline.endpoints) {
        HttpBackendOptions opts;
        opts.timeout_ms = config.gateway.timeout_ms;
        if (auto it = config.models.find(role); it != config.models.end()) opts.model = it->second;
        gateway.bind(role, std::make_shared<HttpBackend>(url, opts));
    }
}

}  // namespace lgir
