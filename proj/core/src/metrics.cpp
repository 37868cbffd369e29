#include "lgir/metrics.hpp"

#include <algorithm>

#include "lgir/error.hpp"

namespace lgir {

bool recall_at_k(std::span<const std::string> ranking, const IdSet& ground_truth, std::size_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    const auto n = std::min(k, ranking.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (ground_truth.count(ranking[i])) return true;
    }
    return false;
}

bool recall_subset_at_k(std::span<const std::string> ranking, const IdSet& subset, const IdSet& ground_truth,
                        std::size_t k) {
    const bool covered = std::any_of(ground_truth.begin(), ground_truth.end(),
                                     [&](const std::string& id) { return subset.count(id) > 0; });
    if (!covered) throw Error(ErrorCode::MissingSubset, "subset group contains no ground-truth image");
    IdList restricted;
    for (const auto& id : ranking) {
        if (subset.count(id)) restricted.push_back(id);
    }
    return recall_at_k(restricted, ground_truth, k);
}

double average_precision_at_k(std::span<const std::string> ranking, const IdSet& ground_truth, std::size_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    if (ground_truth.empty()) throw Error(ErrorCode::InvalidArgument, "ground truth is empty");
    const auto n = std::min(k, ranking.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ground_truth.count(ranking[i])) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    return sum / static_cast<double>(std::min(ground_truth.size(), k));
}

std::vector<int> hits_at_k(const std::vector<IdList>& rounds, const IdSet& ground_truth, std::size_t k,
                           HitsMode mode) {
    std::vector<int> out;
    out.reserve(rounds.size());
    bool seen = false;
    for (const auto& r : rounds) {
        const bool hit = recall_at_k(r, ground_truth, k);
        seen = seen || hit;
        out.push_back(mode == HitsMode::Cumulative ? (seen ? 1 : 0) : (hit ? 1 : 0));
    }
    return out;
}

std::size_t first_hit_rank(std::span<const std::string> ranking, const IdSet& ground_truth) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (ground_truth.count(ranking[i])) return i + 1;
    }
    return 0;
}

}  // namespace lgir
