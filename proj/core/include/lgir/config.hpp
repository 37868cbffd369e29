#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lgir/gateway.hpp"
#include "lgir/types.hpp"

namespace lgir {

/// Everything read from the config file. The pipeline keys (tau, k_verify,
/// alpha_evaluate, temperature, top_p, max_tokens, response_top_k, chat_ref,
/// endpoints) sit at the top level next to the operational ones.
struct AppConfig {
    PipelineConfig pipeline;
    GatewayOptions gateway;
    std::map<BackendRole, std::string> models;
    std::optional<std::filesystem::path> prompt_dir;
    std::optional<std::filesystem::path> state_dir;
    std::optional<std::filesystem::path> cache_file;
    std::size_t workers = 8;

    void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Throws ConfigError for unknown keys or out-of-range values.
AppConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const AppConfig& config);
/// Parses the file (when given), then applies LGIR_BACKEND_<ROLE>_URL overrides.
AppConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = process_env);
void apply_env_overrides(AppConfig& config, const EnvLookup& env);

/// "LGIR_BACKEND_TEXT_ENCODER_URL" for BackendRole::TextEncoder.
std::string endpoint_env_var(BackendRole role);

/// Binds an HTTP backend to every role that has an endpoint.
void bind_http_backends(Gateway& gateway, const AppConfig& config);

}  // namespace lgir
