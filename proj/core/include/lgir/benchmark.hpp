#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgir/adapters.hpp"
#include "lgir/metrics.hpp"

namespace lgir {

struct BenchmarkCase {
    std::string id;
    RetrievalQuery query;
    std::vector<std::string> ground_truth;
    std::optional<std::vector<std::string>> subset_group;
    /// Chat-IR: the feedback of each round, all sharing one ground truth.
    std::optional<std::vector<std::string>> dialog_rounds;

    bool operator==(const BenchmarkCase&) const = default;
};

/// JSON lines of {id, kind, text, reference_image_id?, ground_truth[],
/// subset_group?, dialog_rounds?}. With an index, reference_image_id is
/// resolved to its record; otherwise only the id is kept.
std::vector<BenchmarkCase> parse_cases(std::string_view jsonl, const EmbeddingIndex* index = nullptr);
std::vector<BenchmarkCase> read_cases(const std::filesystem::path& path, const EmbeddingIndex* index = nullptr);
nlohmann::json case_to_json(const BenchmarkCase& c);

/// Problems that would make a case unscorable; empty when all are fine.
std::vector<std::string> validate_cases(const std::vector<BenchmarkCase>& cases,
                                        const EmbeddingIndex* index = nullptr);

struct MetricOptions {
    std::vector<std::size_t> recall_ks{1, 5, 10, 50};
    std::vector<std::size_t> subset_ks{1, 2, 3};
    std::vector<std::size_t> map_ks{5, 10, 25, 50};
    std::vector<std::size_t> hits_ks{1, 5, 10};
    HitsMode hits_mode = HitsMode::Cumulative;

    std::size_t max_k() const;
};

struct CaseOutcome {
    std::string id;
    bool ok = true;
    std::string error_code;
    std::string error_message;
    /// Top entries of the final ranking for each round (one round unless Chat-IR).
    std::vector<IdList> rounds;
    /// 1-based rank of the first ground-truth image per round, 0 if absent.
    std::vector<std::size_t> first_hit;
    double elapsed_ms = 0.0;

    bool operator==(const CaseOutcome&) const = default;
};

struct MetricReport {
    int stages = 3;
    std::map<std::string, double> metrics;
    std::vector<CaseOutcome> cases;
    std::size_t failed = 0;
    double wall_seconds = 0.0;
    double mean_case_ms = 0.0;
    nlohmann::json config;
};

/// Pure aggregation. Failed cases score 0 on every metric they enter.
std::map<std::string, double> aggregate_metrics(const std::vector<BenchmarkCase>& cases,
                                                const std::vector<CaseOutcome>& outcomes,
                                                const MetricOptions& options);

struct BenchmarkOptions {
    Stage last = Stage::Stage3;
    MetricOptions metrics;
    std::size_t workers = 4;
};

/// Runs every case through run_query. A failing case is recorded in the
/// report instead of aborting the batch.
MetricReport run_benchmark(const std::vector<BenchmarkCase>& cases, const EmbeddingIndex& index,
                           const EngineContext& ctx, const BenchmarkOptions& options = {});

nlohmann::json report_to_json(const MetricReport& report);
std::string report_to_markdown(const MetricReport& report);
/// Writes report.json and report.md into `dir`.
void write_report(const MetricReport& report, const std::filesystem::path& dir);

}  // namespace lgir
