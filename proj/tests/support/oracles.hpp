#pragma once

// Brute-force reference implementations. Deliberately naive: scalar loops,
// insertion sorts and explicit comparisons, sharing no code with the engine.

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double dot(const std::vector<float>& a, const float* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

/// Cosine of unit vectors, bounded to [-1, 1] against float rounding.
inline double cosine(const std::vector<float>& a, const float* b, std::size_t d) {
    const double c = dot(a, b, d);
    return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

/// Fused stage-1 score written straight from the formula: the mean over the
/// description vectors of tau * caption sim + (1 - tau) * image sim.
inline std::vector<double> fuse(const std::vector<std::vector<float>>& views, const std::vector<float>& caption_rows,
                                const std::vector<float>& image_rows, std::size_t n, std::size_t d, double tau) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double total = 0.0;
        for (const auto& v : views) {
            const double t = cosine(v, caption_rows.data() + j * d, d);
            const double i = cosine(v, image_rows.data() + j * d, d);
            total += tau * t + (1.0 - tau) * i;
        }
        out[j] = total / static_cast<double>(views.size());
    }
    return out;
}

/// Stable descending order via insertion: an element moves left only past
/// strictly smaller scores.
inline std::vector<std::size_t> stable_desc(const std::vector<double>& scores) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        std::size_t pos = order.size();
        while (pos > 0 && scores[order[pos - 1]] < scores[i]) --pos;
        order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), i);
    }
    return order;
}

struct Item {
    std::string id;
    int count;
    int stage1_rank;
};

/// Orders by (-count, stage1_rank) lexicographically, selection-sort style.
inline std::vector<std::string> lexicographic_rerank(std::vector<Item> head, const std::vector<std::string>& tail) {
    std::vector<std::string> out;
    while (!head.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < head.size(); ++i) {
            const bool better = head[i].count > head[best].count ||
                                (head[i].count == head[best].count && head[i].stage1_rank < head[best].stage1_rank);
            if (better) best = i;
        }
        out.push_back(head[best].id);
        head.erase(head.begin() + static_cast<std::ptrdiff_t>(best));
    }
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

/// First accepted among the first alpha verdicts goes to the front.
inline std::vector<std::string> promote(const std::vector<std::string>& order, const std::vector<bool>& verdicts,
                                        std::size_t alpha) {
    for (std::size_t j = 0; j < verdicts.size() && j < alpha && j < order.size(); ++j) {
        if (!verdicts[j]) continue;
        std::vector<std::string> out{order[j]};
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i != j) out.push_back(order[i]);
        }
        return out;
    }
    return order;
}

/// answers: 0 = No, 1 = Yes, 2 = Ambiguous.
inline int count(const std::vector<int>& answers, const std::vector<bool>& truths) {
    int c = 0;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (answers[i] == 2) continue;
        if ((answers[i] == 1 && truths[i]) || (answers[i] == 0 && !truths[i])) ++c;
    }
    return c;
}

inline bool in(const std::set<std::string>& s, const std::string& x) { return s.find(x) != s.end(); }

inline double recall(const std::vector<std::string>& ranking, const std::set<std::string>& gt, std::size_t k) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (i >= k) break;
        if (in(gt, ranking[i])) return 1.0;
    }
    return 0.0;
}

inline double recall_subset(const std::vector<std::string>& ranking, const std::set<std::string>& subset,
                            const std::set<std::string>& gt, std::size_t k) {
    std::vector<std::string> filtered;
    for (const auto& id : ranking) {
        if (in(subset, id)) filtered.push_back(id);
    }
    return recall(filtered, gt, k);
}

inline double average_precision(const std::vector<std::string>& ranking, const std::set<std::string>& gt,
                                std::size_t k) {
    double sum = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        if (i > ranking.size() || !in(gt, ranking[i - 1])) continue;
        std::size_t relevant = 0;
        for (std::size_t r = 1; r <= i; ++r) {
            if (in(gt, ranking[r - 1])) ++relevant;
        }
        sum += static_cast<double>(relevant) / static_cast<double>(i);
    }
    const std::size_t denom = gt.size() < k ? gt.size() : k;
    return sum / static_cast<double>(denom);
}

inline std::vector<int> hits(const std::vector<std::vector<std::string>>& rounds, const std::set<std::string>& gt,
                             std::size_t k, bool cumulative) {
    std::vector<int> out;
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        int v = 0;
        const std::size_t from = cumulative ? 0 : r;
        for (std::size_t q = from; q <= r; ++q) {
            if (recall(rounds[q], gt, k) > 0.0) v = 1;
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace oracle
