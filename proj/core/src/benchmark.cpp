#include "lgir/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lgir/parallel.hpp"
#include "lgir/text.hpp"

namespace lgir {

using nlohmann::json;

namespace {

IdSet as_set(const std::vector<std::string>& v) { return IdSet(v.begin(), v.end()); }

std::string metric_name(const char* family, std::size_t k) { return std::string(family) + "@" + std::to_string(k); }

std::string format_value(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
}

}  // namespace

std::size_t MetricOptions::max_k() const {
    std::size_t m = 1;
    for (const auto* ks : {&recall_ks, &subset_ks, &map_ks, &hits_ks}) {
        for (auto k : *ks) m = std::max(m, k);
    }
    return m;
}

std::vector<BenchmarkCase> parse_cases(std::string_view jsonl, const EmbeddingIndex* index) {
    std::vector<BenchmarkCase> out;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        const auto where = "case line " + std::to_string(line_no);
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ParseError, where + " is not a JSON object");
        try {
            BenchmarkCase c;
            c.id = j.at("id").get<std::string>();
            c.query.kind = j.at("kind").get<QueryKind>();
            c.query.text = j.value("text", std::string{});
            if (auto it = j.find("reference_image_id"); it != j.end() && !it->is_null()) {
                const auto ref = it->get<std::string>();
                c.query.reference_image = index && index->position(ref) ? index->record(ref) : ImageRecord{ref, {}, {}, {}};
            }
            c.ground_truth = j.at("ground_truth").get<std::vector<std::string>>();
            if (auto it = j.find("subset_group"); it != j.end() && !it->is_null()) {
                c.subset_group = it->get<std::vector<std::string>>();
            }
            if (auto it = j.find("dialog_rounds"); it != j.end() && !it->is_null()) {
                c.dialog_rounds = it->get<std::vector<std::string>>();
            }
            if (c.query.kind == QueryKind::ChatIR && !c.dialog_rounds && !c.query.text.empty()) {
                c.dialog_rounds = std::vector<std::string>{c.query.text};
            }
            if (c.dialog_rounds && !c.dialog_rounds->empty() && c.query.text.empty()) {
                c.query.text = c.dialog_rounds->back();
            }
            out.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, where + ": " + e.what());
        }
    }
    return out;
}

std::vector<BenchmarkCase> read_cases(const std::filesystem::path& path, const EmbeddingIndex* index) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "case file not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_cases(ss.str(), index);
}

json case_to_json(const BenchmarkCase& c) {
    json j{{"id", c.id}, {"kind", c.query.kind}, {"text", c.query.text}, {"ground_truth", c.ground_truth}};
    if (c.query.reference_image) j["reference_image_id"] = c.query.reference_image->id;
    if (c.subset_group) j["subset_group"] = *c.subset_group;
    if (c.dialog_rounds) j["dialog_rounds"] = *c.dialog_rounds;
    return j;
}

std::vector<std::string> validate_cases(const std::vector<BenchmarkCase>& cases, const EmbeddingIndex* index) {
    std::vector<std::string> problems;
    IdSet ids;
    for (const auto& c : cases) {
        const auto tag = "case " + c.id + ": ";
        if (c.id.empty()) problems.push_back("case with an empty id");
        if (!ids.insert(c.id).second) problems.push_back(tag + "duplicate id");
        if (c.ground_truth.empty()) problems.push_back(tag + "ground_truth is empty");
        if (c.query.kind == QueryKind::ChatIR) {
            if (!c.dialog_rounds || c.dialog_rounds->empty()) problems.push_back(tag + "Chat-IR case without dialog_rounds");
            if (c.dialog_rounds) {
                for (const auto& r : *c.dialog_rounds) {
                    if (text::is_blank(r)) problems.push_back(tag + "blank dialog round");
                }
            }
        } else if (auto code = validate_query(c.query)) {
            problems.push_back(tag + std::string(to_string(*code)));
        }
        if (c.subset_group) {
            const auto subset = as_set(*c.subset_group);
            if (std::none_of(c.ground_truth.begin(), c.ground_truth.end(),
                             [&](const std::string& g) { return subset.count(g) > 0; })) {
                problems.push_back(tag + std::string(to_string(ErrorCode::MissingSubset)));
            }
        }
        if (index) {
            for (const auto& g : c.ground_truth) {
                if (!index->position(g)) problems.push_back(tag + "ground truth " + g + " is not in the index");
            }
            if (c.query.reference_image && !index->position(c.query.reference_image->id) &&
                c.query.reference_image->uri.empty()) {
                problems.push_back(tag + "reference image " + c.query.reference_image->id + " is not in the index");
            }
        }
    }
    return problems;
}

std::map<std::string, double> aggregate_metrics(const std::vector<BenchmarkCase>& cases,
                                                const std::vector<CaseOutcome>& outcomes,
                                                const MetricOptions& options) {
    if (cases.size() != outcomes.size()) throw Error(ErrorCode::InvalidArgument, "cases and outcomes differ in length");
    std::map<std::string, double> out;
    if (cases.empty()) return out;

    const IdList empty;
    auto final_ranking = [&](const CaseOutcome& o) -> const IdList& {
        return o.ok && !o.rounds.empty() ? o.rounds.back() : empty;
    };
    const auto n = static_cast<double>(cases.size());

    for (auto k : options.recall_ks) {
        double sum = 0.0;
        for (std::size_t i = 0; i < cases.size(); ++i) {
            sum += recall_at_k(final_ranking(outcomes[i]), as_set(cases[i].ground_truth), k) ? 1.0 : 0.0;
        }
        out[metric_name("recall", k)] = sum / n;
    }
    for (auto k : options.map_ks) {
        double sum = 0.0;
        for (std::size_t i = 0; i < cases.size(); ++i) {
            sum += average_precision_at_k(final_ranking(outcomes[i]), as_set(cases[i].ground_truth), k);
        }
        out[metric_name("map", k)] = sum / n;
    }

    std::size_t with_subset = 0;
    for (const auto& c : cases) with_subset += c.subset_group ? 1 : 0;
    if (with_subset > 0) {
        for (auto k : options.subset_ks) {
            double sum = 0.0;
            for (std::size_t i = 0; i < cases.size(); ++i) {
                if (!cases[i].subset_group) continue;
                try {
                    sum += recall_subset_at_k(final_ranking(outcomes[i]), as_set(*cases[i].subset_group),
                                              as_set(cases[i].ground_truth), k)
                               ? 1.0
                               : 0.0;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::MissingSubset) throw;
                }
            }
            out[metric_name("recall_subset", k)] = sum / static_cast<double>(with_subset);
        }
    }

    std::size_t max_rounds = 0;
    for (const auto& c : cases) {
        if (c.dialog_rounds) max_rounds = std::max(max_rounds, c.dialog_rounds->size());
    }
    for (auto k : options.hits_ks) {
        for (std::size_t r = 0; r < max_rounds; ++r) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t i = 0; i < cases.size(); ++i) {
                if (!cases[i].dialog_rounds || cases[i].dialog_rounds->size() <= r) continue;
                ++count;
                if (!outcomes[i].ok) continue;
                const auto hits = hits_at_k(outcomes[i].rounds, as_set(cases[i].ground_truth), k, options.hits_mode);
                if (r < hits.size()) sum += hits[r];
            }
            if (count > 0) out[metric_name("hits", k) + "/round" + std::to_string(r + 1)] = sum / static_cast<double>(count);
        }
    }
    return out;
}

MetricReport run_benchmark(const std::vector<BenchmarkCase>& cases, const EmbeddingIndex& index,
                           const EngineContext& ctx, const BenchmarkOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    MetricReport report;
    report.stages = static_cast<int>(options.last);
    report.config = ctx.config;
    report.cases.resize(cases.size());
    const auto keep = options.metrics.max_k();

    parallel_for(cases.size(), options.workers, [&](std::size_t i) {
        const auto& c = cases[i];
        auto& o = report.cases[i];
        o.id = c.id;
        const auto t0 = std::chrono::steady_clock::now();
        const auto gt = as_set(c.ground_truth);
        auto take = [&](const RankedList& ranking) {
            IdList all;
            all.reserve(ranking.entries.size());
            for (const auto& e : ranking.entries) all.push_back(e.image_id);
            o.first_hit.push_back(first_hit_rank(all, gt));
            all.resize(std::min(keep, all.size()));
            o.rounds.push_back(std::move(all));
        };
        try {
            if (c.query.kind == QueryKind::ChatIR) {
                Session session;
                session.session_id = "bench";
                session.kind = QueryKind::ChatIR;
                for (const auto& turn : *c.dialog_rounds) {
                    take(run_query({QueryKind::ChatIR, turn, {}, {}}, index, ctx, options.last, &session)
                             .output.ranking);
                }
            } else {
                auto q = c.query;
                if (q.reference_image && q.reference_image->uri.empty()) q.reference_image = index.record(q.reference_image->id);
                take(run_query(q, index, ctx, options.last).output.ranking);
            }
        } catch (const Error& e) {
            o.ok = false;
            o.error_code = std::string(to_string(e.code()));
            o.error_message = e.what();
            o.rounds.clear();
            o.first_hit.clear();
            spdlog::warn("case {} failed: {} {}", c.id, o.error_code, o.error_message);
        }
        o.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    });

    for (const auto& o : report.cases) report.failed += o.ok ? 0 : 1;
    report.metrics = aggregate_metrics(cases, report.cases, options.metrics);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!report.cases.empty()) {
        double total = 0.0;
        for (const auto& o : report.cases) total += o.elapsed_ms;
        report.mean_case_ms = total / static_cast<double>(report.cases.size());
    }
    return report;
}

json report_to_json(const MetricReport& report) {
    json cases = json::array();
    for (const auto& o : report.cases) {
        json c{{"id", o.id}, {"ok", o.ok}, {"first_hit_rank", o.first_hit}, {"elapsed_ms", o.elapsed_ms},
               {"top", o.rounds}};
        if (!o.ok) c["error"] = {{"code", o.error_code}, {"message", o.error_message}};
        cases.push_back(std::move(c));
    }
    return json{{"stages", report.stages},
                {"metrics", report.metrics},
                {"n_cases", report.cases.size()},
                {"n_failed", report.failed},
                {"runtime", {{"wall_seconds", report.wall_seconds}, {"mean_case_ms", report.mean_case_ms}}},
                {"config", report.config},
                {"cases", std::move(cases)}};
}

std::string report_to_markdown(const MetricReport& report) {
    std::ostringstream md;
    md << "# Benchmark report\n\n";
    md << "- stages: " << report.stages << "\n";
    md << "- cases: " << report.cases.size() << " (" << report.failed << " failed)\n";
    md << "- wall time: " << format_value(report.wall_seconds) << " s\n\n";
    md << "| metric | value |\n|---|---|\n";
    for (const auto& [name, value] : report.metrics) md << "| " << name << " | " << format_value(value) << " |\n";
    if (report.failed > 0) {
        md << "\n## Failed cases\n\n| case | code | message |\n|---|---|---|\n";
        for (const auto& o : report.cases) {
            if (!o.ok) md << "| " << o.id << " | " << o.error_code << " | " << o.error_message << " |\n";
        }
    }
    return md.str();
}

void write_report(const MetricReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "report.json") << report_to_json(report).dump(2) << '\n';
    std::ofstream(dir / "report.md") << report_to_markdown(report);
}

}  // namespace lgir
