#include "cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chartinsight/agents.hpp"
#include "chartinsight/bench.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/ingest.hpp"
#include "chartinsight/server.hpp"

namespace chartinsight::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UsageError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& path, const std::string& bytes, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << bytes;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::UsageError, "cannot write " + path);
    f << bytes;
}

std::string transcript_path(const std::string& out) {
    fs::path p(out);
    return (p.parent_path() / (p.stem().string() + ".transcript.json")).string();
}

std::string summary_text(const SummaryDoc& doc) {
    std::string s;
    for (const auto& x : doc.sentences) {
        s += "[" + std::string(to_string(x.level)) + "]";
        if (x.flags.unverifiable) s += "[?]";
        s += " " + x.text + "\n";
    }
    return s;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Summaries of time-series line charts", "chartinsight"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "0.1.0");

    std::string spec, data, backend = "mock", out_path, format = "json", corpus, metrics_only, text, text_file;
    std::uint64_t seed = 7;
    int max_iters = 5, votes = 3;
    bool with_pipeline = false;

    auto add_inputs = [&](CLI::App* c, bool data_required) {
        c->add_option("--spec", spec, "chart specification (JSON)")->required()->check(CLI::ExistingFile);
        auto* d = c->add_option("--data", data, "data table (CSV)")->check(CLI::ExistingFile);
        if (data_required) d->required();
    };
    auto add_output = [&](CLI::App* c) {
        c->add_option("--out", out_path, "output file (stdout when omitted)");
        c->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));
    };

    auto* analyze_cmd = app.add_subcommand("analyze", "compute patch and relation records; no backend");
    add_inputs(analyze_cmd, false);
    add_output(analyze_cmd);

    auto* summarize = app.add_subcommand("summarize", "run the full pipeline");
    add_inputs(summarize, false);
    add_output(summarize);
    summarize->add_option("--backend", backend, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
    summarize->add_option("--seed", seed, "backend seed");
    summarize->add_option("--max-iters", max_iters, "refinement bound")->check(CLI::PositiveNumber);
    summarize->add_option("--vote-candidates", votes, "odd number of multi-insight candidates");

    auto* annotate_cmd = app.add_subcommand("annotate", "build a summary document from prose");
    add_inputs(annotate_cmd, false);
    add_output(annotate_cmd);
    annotate_cmd->add_option("--text", text, "summary prose");
    annotate_cmd->add_option("--text-file", text_file, "file holding the prose")->check(CLI::ExistingFile);
    std::string source = "pipeline", chart_id, model;
    annotate_cmd->add_option("--source", source, "pipeline, gold or external-model")
        ->check(CLI::IsMember({"pipeline", "gold", "external-model"}));
    annotate_cmd->add_option("--chart-id", chart_id, "chart id stored in the document");
    annotate_cmd->add_option("--model", model, "model name stored in the document");

    auto* evaluate = app.add_subcommand("evaluate", "metrics table over a benchmark corpus");
    evaluate->add_option("corpus", corpus, "corpus directory")->required();
    add_output(evaluate);
    evaluate->add_option("--metrics-only", metrics_only, "diversity or quality")
        ->check(CLI::IsMember({"diversity", "quality"}));
    evaluate->add_flag("--pipeline", with_pipeline, "add a row for the pipeline on the mock backend");
    evaluate->add_option("--seed", seed, "mock seed for the pipeline row");

    auto* stats = app.add_subcommand("bench-stats", "hallucination frequency table");
    stats->add_option("corpus", corpus, "corpus directory")->required();
    add_output(stats);

    auto* complexity = app.add_subcommand("complexity", "peak counts and complexity level of a chart");
    add_inputs(complexity, false);

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "run the job API");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << "0.1.0\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*analyze_cmd) {
            auto chart = load_chart(read_file(spec), data.empty() ? std::string() : read_file(data));
            const auto facts = analyze(chart.data);
            json uni = json::array();
            for (const auto& d : chart.data.dimension_names()) uni.push_back(to_json(uni_insight(chart, d, facts.cfg)));
            json multi = nullptr;
            if (chart.data.dimensions.size() >= 2)
                multi = to_json(multi_insight(facts.patches, chart.data, chart.data.full_range()), chart.data);
            json rec{{"title", chart.l1.title},
                     {"x_label", chart.l1.x_label},
                     {"y_label", chart.l1.y_label},
                     {"dimensions", chart.data.dimension_names()},
                     {"uni", uni},
                     {"multi", multi}};
            if (format == "text") {
                std::string s;
                for (const auto& u : uni) {
                    s += u["dimension"].get<std::string>() + ": " + std::to_string(u["patches"].size()) + " patches\n";
                    for (const auto& p : u["patches"])
                        s += "  " + p.value("start", "") + " .. " + p.value("end", "") + "  " +
                             p.value("trend", "") + "\n";
                }
                emit(out_path, s, out);
            } else {
                emit(out_path, rec.dump(2) + "\n", out);
            }
        } else if (*summarize) {
            PipelineConfig cfg;
            cfg.seed = seed;
            cfg.max_refine_iters = max_iters;
            cfg.vote_candidates = votes;
            auto b = make_backend(backend, seed);
            auto r = run_pipeline(read_file(spec), data.empty() ? std::string() : read_file(data), cfg, *b);
            emit(out_path, format == "text" ? summary_text(r.summary) : serialize(r.summary) + "\n", out);
            if (!out_path.empty() && out_path != "-")
                emit(transcript_path(out_path), r.transcript.to_json().dump(2) + "\n", out);
        } else if (*annotate_cmd) {
            auto chart = load_chart(read_file(spec), data.empty() ? std::string() : read_file(data));
            const std::string prose = text_file.empty() ? text : read_file(text_file);
            if (prose.empty()) throw Error(ErrorCode::UsageError, "annotate needs --text or --text-file");
            const auto facts = analyze(chart.data);
            auto b = make_backend("mock", seed);
            const DocSource src = source == "gold" ? DocSource::Gold
                                  : source == "external-model" ? DocSource::ExternalModel
                                                               : DocSource::Pipeline;
            auto doc = annotate(prose, facts, chart.l1, b.get(), src);
            doc.chart_id = chart_id.empty() ? chart.l1.title : chart_id;
            doc.model = model;
            emit(out_path, format == "text" ? summary_text(doc) : to_json(doc).dump(2) + "\n", out);
        } else if (*evaluate) {
            auto c = load_corpus(corpus);
            for (const auto& e : c.errors) err << "skipped " << e.chart_id << ": " << to_string(e.code) << ": " << e.message << "\n";
            EvalOptions o;
            o.diversity = metrics_only != "quality";
            o.quality = metrics_only != "diversity";
            std::unique_ptr<Backend> b;
            if (with_pipeline) {
                b = make_backend("mock", seed);
                o.pipeline_backend = b.get();
            }
            auto report = run_eval(c, o);
            emit(out_path, format == "text" ? format_table(report) : to_json(report).dump(2) + "\n", out);
            if (!c.errors.empty()) return 1;
        } else if (*stats) {
            auto c = load_corpus(corpus);
            for (const auto& e : c.errors) err << "skipped " << e.chart_id << ": " << to_string(e.code) << ": " << e.message << "\n";
            auto s = corpus_stats(c);
            emit(out_path, format == "text" ? format_table(s) : to_json(s).dump(2) + "\n", out);
            if (!c.errors.empty()) return 1;
        } else if (*complexity) {
            auto chart = load_chart(read_file(spec), data.empty() ? std::string() : read_file(data));
            auto s = score_complexity(chart.data);
            out << json{{"level", std::string(to_string(s.level))},
                        {"peaks", s.peaks},
                        {"peaks_per_dimension", s.peaks_per_dimension}}
                       .dump(2)
                << "\n";
        } else if (*serve) {
            JobService svc(ServiceConfig::from_env());
            HttpOptions ho;
            ho.host = host;
            ho.port = port;
            if (const char* t = std::getenv("CI_TOKEN"); t && *t) ho.token = t;
            HttpServer server(svc, ho);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            err << "listening on " << host << ":" << port << "\n";
            server.run();
            g_server = nullptr;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::UsageError ? 2 : 1;
    }
    return 0;
}

}  // namespace chartinsight::cli
