#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "lgir/adapters.hpp"
#include "lgir/benchmark.hpp"
#include "lgir/config.hpp"
#include "lgir/mock_backend.hpp"
#include "lgir/service.hpp"
#include "lgir/text.hpp"

namespace lgir::cli {

namespace {

struct Globals {
    std::string config_path;
    bool mock = false;
    std::string cache_path;
    std::string log_level = "warn";
    std::string prompt_dir;
};

struct Overrides {
    std::optional<double> tau;
    std::optional<int> k_verify;
    std::optional<int> alpha;
};

// Everything a command needs once options are parsed.
struct Runtime {
    AppConfig config;
    std::unique_ptr<Gateway> gateway;
    std::unique_ptr<ResultCache> cache;
    std::unique_ptr<PromptLibrary> prompts;

    EngineContext context(const ImageSource& images) const {
        return EngineContext{*gateway, *cache, images, config.pipeline,
                             prompts ? *prompts : PromptLibrary::builtin(), config.workers};
    }
};

Runtime make_runtime(const Globals& g, const Overrides& o, const GatewayFactory& factory) {
    Runtime rt;
    rt.config = load_config(g.config_path.empty() ? std::nullopt
                                                  : std::optional<std::filesystem::path>(g.config_path));
    if (o.tau) rt.config.pipeline.tau = *o.tau;
    if (o.k_verify) rt.config.pipeline.k_verify = *o.k_verify;
    if (o.alpha) rt.config.pipeline.alpha_evaluate = *o.alpha;
    rt.config.validate();

    rt.gateway = std::make_unique<Gateway>(rt.config.gateway);
    if (factory) {
        factory(*rt.gateway);
    } else if (g.mock) {
        auto mock = make_demo_mock();
        for (auto role : kAllRoles) rt.gateway->bind(role, mock);
    } else {
        bind_http_backends(*rt.gateway, rt.config);
    }

    const auto cache_file = !g.cache_path.empty() ? std::optional<std::filesystem::path>(g.cache_path)
                                                  : rt.config.cache_file;
    rt.cache = cache_file ? std::make_unique<ResultCache>(*cache_file) : std::make_unique<ResultCache>();
    const auto prompt_dir = !g.prompt_dir.empty() ? std::optional<std::filesystem::path>(g.prompt_dir)
                                                  : rt.config.prompt_dir;
    if (prompt_dir) rt.prompts = std::make_unique<PromptLibrary>(PromptLibrary::load(*prompt_dir));
    return rt;
}

std::string flag_text(const std::optional<bool>& f) {
    if (!f) return "-";
    return *f ? "yes" : "no";
}

void print_table(std::ostream& out, const RankedList& ranking, std::size_t top, std::size_t m) {
    out << std::left << std::setw(6) << "rank" << std::setw(28) << "image_id" << std::setw(12) << "s"
        << std::setw(10) << "c/M" << "f\n";
    for (std::size_t i = 0; i < std::min(top, ranking.entries.size()); ++i) {
        const auto& e = ranking.entries[i];
        std::ostringstream score, count;
        score << std::fixed << std::setprecision(6) << e.stage1_score;
        if (e.stage2_count) {
            count << *e.stage2_count << "/" << m;
        } else {
            count << "-";
        }
        out << std::left << std::setw(6) << (i + 1) << std::setw(28) << e.image_id << std::setw(12) << score.str()
            << std::setw(10) << count.str() << flag_text(e.stage3_flag) << "\n";
    }
}

std::shared_ptr<const EmbeddingIndex> open_index(const std::string& path) {
    return std::make_shared<const EmbeddingIndex>(load_index(path));
}

void configure_logging(const std::string& level) {
    spdlog::set_level(spdlog::level::from_str(level));
    spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, Streams io, const GatewayFactory& factory) {
    CLI::App app{"Training-free language-guided image retrieval"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "lgir 0.1.0");

    Globals g;
    app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_flag("--mock", g.mock, "Use the built-in deterministic mock backends");
    app.add_option("--cache", g.cache_path, "Persistent result cache (JSON lines)");
    app.add_option("--prompt-dir", g.prompt_dir, "Override the built-in prompt resources");
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")->capture_default_str();

    Overrides o;
    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--tau", o.tau, "Caption-path weight in score fusion");
        cmd->add_option("--k-verify", o.k_verify, "Candidates verified in stage 2");
        cmd->add_option("--alpha", o.alpha, "Maximum candidates evaluated in stage 3");
    };

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Caption and embed a manifest into an index file");
    std::string manifest, index_out;
    ingest_cmd->add_option("manifest", manifest, "JSON-lines manifest of {id, uri}")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("-o,--output", index_out, "Index file to write")->required();

    // search
    auto* search_cmd = app.add_subcommand("search", "Run one TIR or CIR query");
    std::string kind = "tir", query_text, ref, index_path, trace_out = "trace.json";
    int stages = 3;
    std::size_t top = 10;
    search_cmd->add_option("--kind", kind, "tir or cir")->check(CLI::IsMember({"tir", "cir"}, CLI::ignore_case))->capture_default_str();
    search_cmd->add_option("--text", query_text, "Description or modification instruction")->required();
    search_cmd->add_option("--ref", ref, "Reference image: an index id or an image path");
    search_cmd->add_option("--index", index_path, "Index file")->required();
    search_cmd->add_option("--stages", stages, "Last stage to run (1-3)")->check(CLI::Range(1, 3))->capture_default_str();
    search_cmd->add_option("--top", top, "Rows to print")->capture_default_str();
    search_cmd->add_option("--trace", trace_out, "Where to write the ranking and trace JSON")->capture_default_str();
    add_overrides(search_cmd);

    // chat
    auto* chat_cmd = app.add_subcommand("chat", "Interactive Chat-IR loop reading one feedback per line");
    chat_cmd->add_option("--index", index_path, "Index file")->required();
    chat_cmd->add_option("--top", top, "Rows to print per round")->capture_default_str();
    chat_cmd->add_option("--stages", stages, "Last stage to run (1-3)")->check(CLI::Range(1, 3));
    add_overrides(chat_cmd);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark case file and write report.json/report.md");
    std::string cases_path, out_dir = "report";
    std::string hits_mode = "cumulative";
    std::size_t bench_workers = 4;
    bench_cmd->add_option("cases", cases_path, "JSON-lines benchmark cases")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--index", index_path, "Index file")->required();
    bench_cmd->add_option("--stages", stages, "Last stage to run (1-3)")->check(CLI::Range(1, 3))->capture_default_str();
    bench_cmd->add_option("--out", out_dir, "Report directory")->capture_default_str();
    bench_cmd->add_option("--hits-mode", hits_mode, "cumulative or per_round")
        ->check(CLI::IsMember({"cumulative", "per_round"}))
        ->capture_default_str();
    bench_cmd->add_option("--workers", bench_workers, "Cases run concurrently")->capture_default_str();
    add_overrides(bench_cmd);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Serve the /v1 HTTP API");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve_cmd->add_option("--index", index_path, "Index file")->required();
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535))->capture_default_str();
    add_overrides(serve_cmd);

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Check a benchmark case file");
    validate_cmd->add_option("cases", cases_path, "JSON-lines benchmark cases")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--index", index_path, "Index file to check ids against");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, io.out, io.err) == 0 ? 0 : 2;
    }

    configure_logging(g.log_level);
    try {
        if (validate_cmd->parsed()) {
            std::shared_ptr<const EmbeddingIndex> index;
            if (!index_path.empty()) index = open_index(index_path);
            const auto cases = read_cases(cases_path, index.get());
            const auto problems = validate_cases(cases, index.get());
            for (const auto& p : problems) io.out << p << "\n";
            io.out << cases.size() << " cases, " << problems.size() << " problems\n";
            return problems.empty() ? 0 : 1;
        }

        auto rt = make_runtime(g, o, factory);

        if (ingest_cmd->parsed()) {
            FileImageSource source;
            const auto entries = absolutize(read_manifest(manifest), std::filesystem::path(manifest).parent_path());
            IngestOptions opts;
            opts.sampling = sampling_from(rt.config.pipeline);
            opts.workers = rt.config.workers;
            const auto index = ingest(entries, source, *rt.gateway, *rt.cache, opts);
            save_index(index, index_out);
            io.out << "indexed " << index.size() << " images (d=" << index.dim() << ") -> " << index_out << "\n";
            return 0;
        }

        FileImageSource files;
        const auto index = open_index(index_path);
        const auto ctx = rt.context(files);

        if (search_cmd->parsed()) {
            RetrievalQuery q;
            q.kind = text::iequals(kind, "cir") ? QueryKind::CIR : QueryKind::TIR;
            q.text = query_text;
            std::optional<ImagePart> part;
            if (!ref.empty()) {
                if (index->position(ref)) {
                    q.reference_image = index->record(ref);
                } else {
                    auto bytes = files.read(ref);
                    q.reference_image = make_image_record("ref", ref, bytes);
                    part = ImagePart{bytes, ref, sniff_mime_type(bytes)};
                }
            }
            const auto result = run_query(q, *index, ctx, static_cast<Stage>(stages), nullptr, part);
            print_table(io.out, result.output.ranking, top, result.output.ranking.trace.propositions.size());
            nlohmann::json dump{{"query", q},
                                {"instruction", result.adapted.instruction},
                                {"ref_desc", result.adapted.ref_desc},
                                {"ranking", result.output.ranking}};
            std::ofstream(trace_out) << dump.dump(2) << "\n";
            return 0;
        }

        if (chat_cmd->parsed()) {
            SessionStore store(rt.config.state_dir);
            auto session = store.create(QueryKind::ChatIR);
            io.out << "session " << session.session_id << " (empty line or /quit ends)\n";
            std::string line;
            while (io.out << "> " << std::flush, std::getline(io.in, line)) {
                const auto t = text::trim(line);
                if (t.empty() || t == "/quit") break;
                try {
                    const auto result = run_query({QueryKind::ChatIR, std::string(t), {}, {}}, *index, ctx,
                                                  static_cast<Stage>(stages), &session);
                    store.save(session);
                    io.out << "round " << session.rounds.size() << ": " << session.current_ref_desc << "\n";
                    print_table(io.out, result.output.ranking, top, result.output.ranking.trace.propositions.size());
                } catch (const Error& e) {
                    io.err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
                }
            }
            return 0;
        }

        if (bench_cmd->parsed()) {
            const auto cases = read_cases(cases_path, index.get());
            BenchmarkOptions opts;
            opts.last = static_cast<Stage>(stages);
            opts.workers = bench_workers;
            opts.metrics.hits_mode = hits_mode == "per_round" ? HitsMode::PerRound : HitsMode::Cumulative;
            const auto report = run_benchmark(cases, *index, ctx, opts);
            write_report(report, out_dir);
            io.out << report_to_markdown(report);
            return 0;
        }

        if (serve_cmd->parsed()) {
            SessionStore store(rt.config.state_dir);
            Service service(*rt.gateway, *rt.cache, std::make_shared<FileImageSource>(), store, rt.config.pipeline,
                            index, rt.config.workers);
            service.listen(host, port);
            return 0;
        }
    } catch (const Error& e) {
        io.err << "error: " << to_string(e.code()) << ": " << e.what();
        if (!e.stage().empty()) io.err << " (stage " << e.stage() << ")";
        io.err << "\n";
        return 1;
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace lgir::cli
