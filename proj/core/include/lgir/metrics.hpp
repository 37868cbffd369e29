#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

namespace lgir {

using IdList = std::vector<std::string>;
using IdSet = std::set<std::string>;

/// True iff a ground-truth id occurs among the first k entries.
bool recall_at_k(std::span<const std::string> ranking, const IdSet& ground_truth, std::size_t k);

/// Recall after restricting the ranking to `subset` (order kept).
/// Throws MissingSubset when the subset holds no ground-truth id.
bool recall_subset_at_k(std::span<const std::string> ranking, const IdSet& subset, const IdSet& ground_truth,
                        std::size_t k);

/// sum_{i<=k} rel(i) * P@i / min(|GT|, k); positions past the end of the
/// ranking are not relevant.
double average_precision_at_k(std::span<const std::string> ranking, const IdSet& ground_truth, std::size_t k);

enum class HitsMode { Cumulative, PerRound };

/// One 0/1 value per round. Cumulative: hit at any round so far.
std::vector<int> hits_at_k(const std::vector<IdList>& rounds, const IdSet& ground_truth, std::size_t k,
                           HitsMode mode = HitsMode::Cumulative);

/// 1-based position of the first ground-truth id, 0 when absent.
std::size_t first_hit_rank(std::span<const std::string> ranking, const IdSet& ground_truth);

}  // namespace lgir
