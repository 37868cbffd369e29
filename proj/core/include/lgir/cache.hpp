#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace lgir {

/// Thread-safe string-keyed store for model outputs (captions, embeddings,
/// verifier answers). Keys are namespaced, e.g. ("caption", content_hash).
/// With a backing file every put is appended as one JSON line immediately,
/// so an interrupted ingest resumes from what was already computed.
class ResultCache {
public:
    ResultCache() = default;
    explicit ResultCache(std::filesystem::path file);

    std::optional<nlohmann::json> get(const std::string& ns, const std::string& key) const;
    void put(const std::string& ns, const std::string& key, nlohmann::json value);
    std::size_t size() const;
    std::size_t hits() const;
    std::size_t misses() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, nlohmann::json> entries_;
    std::optional<std::filesystem::path> file_;
    std::ofstream out_;
    mutable std::size_t hits_ = 0;
    mutable std::size_t misses_ = 0;
};

}  // namespace lgir
