#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lgir/config.hpp"

using namespace lgir;
using nlohmann::json;

namespace {

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

}  // namespace

TEST(Config, DefaultsArePaperValues) {
    const auto c = config_from_json(json::object());
    EXPECT_DOUBLE_EQ(c.pipeline.tau, 0.15);
    EXPECT_EQ(c.pipeline.k_verify, 20);
    EXPECT_EQ(c.pipeline.alpha_evaluate, 3);
    EXPECT_DOUBLE_EQ(c.pipeline.temperature, 0.0);
    EXPECT_DOUBLE_EQ(c.pipeline.top_p, 1.0);
    EXPECT_EQ(c.pipeline.chat_ref, ChatReference::ComprehensiveSynthesis);
}

TEST(Config, ParsesEveryKey) {
    const auto j = json::parse(R"({
        "tau": 0.3, "k_verify": 10, "alpha_evaluate": 2, "temperature": 0.0, "top_p": 1.0,
        "max_tokens": 256, "response_top_k": 25, "chat_ref": "top1_caption",
        "endpoints": {"reasoner": "http://127.0.0.1:9000"},
        "models": {"reasoner": "some-model"},
        "gateway": {"max_retries": 1, "backoff_base_ms": 5, "timeout_ms": 1000, "per_role_concurrency": 2},
        "prompt_dir": "/tmp/prompts", "state_dir": "/tmp/state", "cache_file": "/tmp/cache.jsonl", "workers": 3
    })");
    const auto c = config_from_json(j);
    EXPECT_DOUBLE_EQ(c.pipeline.tau, 0.3);
    EXPECT_EQ(c.pipeline.k_verify, 10);
    EXPECT_EQ(c.pipeline.chat_ref, ChatReference::Top1Caption);
    EXPECT_EQ(c.pipeline.endpoints.at(BackendRole::Reasoner), "http://127.0.0.1:9000");
    EXPECT_EQ(c.models.at(BackendRole::Reasoner), "some-model");
    EXPECT_EQ(c.gateway.max_retries, 1);
    EXPECT_EQ(c.gateway.per_role_concurrency, 2u);
    EXPECT_EQ(c.workers, 3u);
    EXPECT_EQ(c.cache_file->string(), "/tmp/cache.jsonl");
    // Serialization round-trips.
    const auto again = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_EQ(code_of([] { config_from_json(json{{"tua", 0.2}}); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { config_from_json(json{{"tau", 1.5}}); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { config_from_json(json{{"tau", -0.1}}); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { config_from_json(json{{"k_verify", 0}}); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { config_from_json(json{{"alpha_evaluate", 0}}); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { config_from_json(json{{"tau", "high"}}); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { config_from_json(json{{"endpoints", {{"painter", "http://x"}}}}); }),
              ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { config_from_json(json::array()); }), ErrorCode::ConfigError);
}

TEST(Config, EnvironmentOverridesFile) {
    const auto path = std::filesystem::temp_directory_path() / "lgir_config_test.json";
    std::ofstream(path) << R"({"endpoints": {"verifier": "http://file:1", "reasoner": "http://file:2"}})";
    const auto c = load_config(path, env_of({{"LGIR_BACKEND_VERIFIER_URL", "http://env:3"}}));
    EXPECT_EQ(c.pipeline.endpoints.at(BackendRole::Verifier), "http://env:3");
    EXPECT_EQ(c.pipeline.endpoints.at(BackendRole::Reasoner), "http://file:2");
    std::filesystem::remove(path);
}

TEST(Config, EnvVarNames) {
    EXPECT_EQ(endpoint_env_var(BackendRole::TextEncoder), "LGIR_BACKEND_TEXT_ENCODER_URL");
    EXPECT_EQ(endpoint_env_var(BackendRole::Captioner), "LGIR_BACKEND_CAPTIONER_URL");
}

TEST(Config, MissingOrBrokenFile) {
    EXPECT_EQ(code_of([] { load_config(std::filesystem::path("/nonexistent/lgir.json"), env_of({})); }),
              ErrorCode::ConfigError);
    const auto path = std::filesystem::temp_directory_path() / "lgir_config_broken.json";
    std::ofstream(path) << "{not json";
    EXPECT_EQ(code_of([&] { load_config(path, env_of({})); }), ErrorCode::ConfigError);
    std::filesystem::remove(path);
}

TEST(Config, BindsHttpBackends) {
    AppConfig c;
    c.pipeline.endpoints[BackendRole::Reasoner] = "http://127.0.0.1:1";
    Gateway g;
    bind_http_backends(g, c);
    EXPECT_NE(g.backend(BackendRole::Reasoner), nullptr);
    EXPECT_EQ(g.backend(BackendRole::Verifier), nullptr);
}
