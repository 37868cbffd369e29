#include "lgir/cache.hpp"

#include <spdlog/spdlog.h>

#include "lgir/error.hpp"

namespace lgir {

namespace {
std::string compound(const std::string& ns, const std::string& key) { return ns + '\x1f' + key; }
}  // namespace

ResultCache::ResultCache(std::filesystem::path file) : file_(std::move(file)) {
    if (std::filesystem::exists(*file_)) {
        std::ifstream in(*file_);
        std::string line;
        std::size_t skipped = 0;
        while (std::getline(in, line)) {
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("ns") || !j.contains("key") || !j.contains("value")) {
                ++skipped;
                continue;
            }
            entries_[compound(j["ns"].get<std::string>(), j["key"].get<std::string>())] = j["value"];
        }
        if (skipped > 0) spdlog::warn("cache {}: skipped {} unreadable lines", file_->string(), skipped);
    } else if (file_->has_parent_path()) {
        std::filesystem::create_directories(file_->parent_path());
    }
    out_.open(*file_, std::ios::app);
    if (!out_) throw Error(ErrorCode::ConfigError, "cannot open cache file " + file_->string());
}

std::optional<nlohmann::json> ResultCache::get(const std::string& ns, const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(compound(ns, key));
    if (it == entries_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return std::optional<nlohmann::json>(std::in_place, it->second);
}

void ResultCache::put(const std::string& ns, const std::string& key, nlohmann::json value) {
    std::lock_guard lock(mutex_);
    if (out_.is_open()) {
        out_ << nlohmann::json{{"ns", ns}, {"key", key}, {"value", value}}.dump() << '\n';
        out_.flush();
    }
    entries_[compound(ns, key)] = std::move(value);
}

std::size_t ResultCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::size_t ResultCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t ResultCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

}  // namespace lgir
