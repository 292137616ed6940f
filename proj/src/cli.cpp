#include "cora/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cora/errors.hpp"
#include "cora/graph_builder.hpp"
#include "cora/inference.hpp"
#include "cora/metrics.hpp"
#include "cora/service.hpp"
#include "cora/text.hpp"

namespace cora {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) throw InvalidArgument(path.string() + " is not valid JSON");
    return doc;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + path.string());
    out << text;
}

void print_json(std::ostream& out, const json& doc) { out << doc.dump(2) << "\n"; }

std::string verdict_line(const InferenceResult& r) {
    return "verdict: " + to_string(r.verdict.direction) + " (U=" + format_fixed(r.verdict.upward_mass, 6) +
           ", D=" + format_fixed(r.verdict.downward_mass, 6) + ", tau=" + format_double(r.verdict.tau) + ")";
}

void print_result(std::ostream& out, const InferenceResult& r) {
    out << verdict_line(r) << "\n" << r.explanation << "\n";
    for (const auto& n : r.notes) out << "note: " << n << "\n";
}

struct InferenceFlags {
    double tau = 0.05;
    int max_len = 6;
    std::size_t top_k = 5;

    void attach(CLI::App* app) {
        app->add_option("--tau", tau, "Netting threshold on normalized mass shares")->capture_default_str();
        app->add_option("--max-len", max_len, "Maximum proof path length in hops")->capture_default_str();
        app->add_option("--top-k", top_k, "Chains listed per pressure group in explanations")->capture_default_str();
    }
    InferenceParams params() const {
        InferenceParams p{tau, max_len, top_k};
        check_params(p);
        return p;
    }
};

SourceSpec parse_source(const std::string& text) {
    // "label" or "label=increasing"
    auto eq = text.rfind('=');
    if (eq == std::string::npos) return {text, std::nullopt};
    return {text.substr(0, eq), assumed_value_from_string(normalize_label(text.substr(eq + 1)))};
}

}  // namespace

CausalModel load_model_file(const fs::path& path) {
    const std::string text = read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{')) {
        json doc = json::parse(text, nullptr, false);
        if (doc.is_discarded()) throw InvalidArgument(path.string() + " is not valid JSON");
        if (doc.contains("map") && doc["map"].is_object()) return from_json(doc["map"]);
        return from_json(doc);
    }
    auto parsed = parse_model(text);
    if (!parsed.ok()) {
        std::string detail;
        for (const auto& e : parsed.errors) detail += path.string() + ":" + e.to_string() + "\n";
        throw InvalidArgument("cannot parse " + path.string() + ": " + parsed.errors.front().to_string(), detail);
    }
    return *parsed.model;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"cora: qualitative causal reasoning over evidenced knowledge graphs", "cora"};
    app.require_subcommand(1);
    std::string format = "text";
    app.add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    app.fallthrough();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Append JSONL events to a knowledge base directory");
    std::string ingest_file, kb_dir = "kb";
    ingest->add_option("events", ingest_file, "JSONL file (one event per line)")->required();
    ingest->add_option("--kb", kb_dir, "Knowledge base directory")->capture_default_str();

    // build
    auto* build = app.add_subcommand("build", "Build a scenario causal map from the knowledge base");
    std::vector<std::string> sources;
    std::string target, out_file;
    SearchParams search;
    std::size_t top_paths = 10;
    InferenceFlags build_flags;
    build->add_option("--kb", kb_dir, "Knowledge base directory")->capture_default_str();
    build->add_option("--source,-s", sources, "Source concept, optionally label=value")->required();
    build->add_option("--target,-t", target, "Target concept")->required();
    build->add_option("--max-hops", search.max_hops, "Path length limit")->capture_default_str();
    build->add_option("--beam", search.beam_width, "Pops per search frontier (0 = unbounded)")->capture_default_str();
    build->add_option("--paths", top_paths, "Paths kept per source (0 = all)")->capture_default_str();
    build->add_option("--heuristic", search.heuristic, "lexical or null")->capture_default_str();
    build->add_option("--min-confidence", search.min_confidence, "Drop events below this confidence");
    build->add_option("--out,-o", out_file, "Write the map document here");
    build_flags.attach(build);

    // infer / explain / whatif
    auto* infer_cmd = app.add_subcommand("infer", "Run qualitative inference on a map");
    std::string map_file;
    InferenceFlags flags;
    infer_cmd->add_option("map", map_file, "Map document (.json) or model (.cora)")->required();
    flags.attach(infer_cmd);

    auto* explain_cmd = app.add_subcommand("explain", "Print the explanation for a map's scenario");
    explain_cmd->add_option("map", map_file, "Map document (.json) or model (.cora)")->required();
    flags.attach(explain_cmd);

    auto* whatif_cmd = app.add_subcommand("whatif", "Apply an edit set and re-run inference");
    std::string edits_file;
    whatif_cmd->add_option("map", map_file, "Map document (.json) or model (.cora)")->required();
    whatif_cmd->add_option("--edits,-e", edits_file, "JSON edit set")->required();
    whatif_cmd->add_option("--out,-o", out_file, "Write the edited map document here");
    flags.attach(whatif_cmd);

    // convert
    auto* convert = app.add_subcommand("convert", "Convert between the DSL and the JSON map document");
    std::string to = "json";
    convert->add_option("map", map_file, "Input model")->required();
    convert->add_option("--to", to, "json or dsl")->check(CLI::IsMember({"json", "dsl"}))->capture_default_str();

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "Compute verifiability metrics from annotations");
    std::string annotations_file, complexity_file, system = "Cora";
    bool all_citations = false;
    metrics_cmd->add_option("annotations", annotations_file, "Annotation JSON file")->required();
    metrics_cmd->add_option("--complexity", complexity_file, "Complexity annotations keyed by answer_id");
    metrics_cmd->add_flag("--all-citations", all_citations, "Citation density over all citations");
    metrics_cmd->add_option("--system", system, "Row label")->capture_default_str();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/JSON service");
    ServiceConfig config;
    std::optional<int> port;
    std::optional<std::string> serve_kb, maps_dir;
    serve_cmd->add_option("--host", config.host)->capture_default_str();
    serve_cmd->add_option("--port", port, "Listen port (default 8080, or CORA_PORT)");
    serve_cmd->add_option("--kb", serve_kb, "Knowledge base directory (default kb, or CORA_KB)");
    serve_cmd->add_option("--maps", maps_dir, "Saved map directory (default maps, or CORA_MAPS)");

    // template
    auto* tmpl_cmd = app.add_subcommand("template", "Generalize maps into typed templates and instantiate them");
    tmpl_cmd->require_subcommand(1);
    auto* generalize = tmpl_cmd->add_subcommand("generalize", "Replace typed concepts with slots");
    generalize->add_option("map", map_file, "Map document or model")->required();
    generalize->add_option("--kb", kb_dir, "Knowledge base directory (type hierarchy)");
    generalize->add_option("--out,-o", out_file, "Write the template here");
    auto* instantiate = tmpl_cmd->add_subcommand("instantiate", "Bind template slots to concepts");
    std::string template_file;
    std::vector<std::string> binds;
    instantiate->add_option("template", template_file, "Template JSON")->required();
    instantiate->add_option("--bind,-b", binds, "Slot binding ?x1=label")->required();
    instantiate->add_option("--kb", kb_dir, "Knowledge base directory")->capture_default_str();
    instantiate->add_option("--out,-o", out_file, "Write the map document here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    const bool as_json = format == "json";

    try {
        if (*ingest) {
            auto kb = KnowledgeBase::open(kb_dir);
            std::ifstream in(ingest_file, std::ios::binary);
            if (!in) throw NotFound("cannot read " + ingest_file);
            auto report = ingest_events(in, kb);
            if (as_json) {
                print_json(out, report.to_json());
            } else {
                out << "accepted " << report.accepted << ", rejected " << report.rejected << "\n";
                for (const auto& r : report.rejection_reasons) out << "  line " << r.line << ": " << r.reason << "\n";
                for (const auto& w : report.warnings) out << "  warning: " << w << "\n";
            }
            return 0;
        }
        if (*build) {
            auto kb = KnowledgeBase::load(kb_dir);
            std::vector<SourceSpec> specs;
            for (const auto& s : sources) specs.push_back(parse_source(s));
            search.top_k = top_paths == 0 ? std::nullopt : std::optional<std::size_t>(top_paths);
            auto built = build_map(kb, specs, target, search);
            auto result = infer(built.model, build_flags.params());
            if (!out_file.empty()) write_file(out_file, to_json(built.model).dump(2) + "\n");
            if (as_json) {
                json paths = json::array();
                for (const auto& p : built.paths)
                    paths.push_back({{"source", p.source}, {"nodes", p.nodes}, {"edges", p.edges}, {"strength", p.strength}});
                print_json(out, {{"map", to_json(built.model)},
                                 {"result", to_json(result)},
                                 {"diagnostics", built.diagnostics.to_json()},
                                 {"paths", paths}});
            } else {
                out << "map: " << built.model.nodes.size() << " nodes, " << built.model.edges.size() << " edges\n";
                for (const auto& m : built.diagnostics.messages) out << "note: " << m << "\n";
                print_result(out, result);
            }
            return 0;
        }
        if (*infer_cmd) {
            auto result = infer(load_model_file(map_file), flags.params());
            if (as_json)
                print_json(out, to_json(result));
            else
                print_result(out, result);
            return 0;
        }
        if (*explain_cmd) {
            auto result = infer(load_model_file(map_file), flags.params());
            if (as_json)
                print_json(out, {{"explanation", result.explanation}});
            else
                out << result.explanation << "\n";
            return 0;
        }
        if (*whatif_cmd) {
            auto model = load_model_file(map_file);
            auto edits = edits_from_json(read_json(edits_file));
            auto edited = apply_edits(model, edits);
            auto result = infer(edited, flags.params());
            if (!out_file.empty()) write_file(out_file, to_json(edited).dump(2) + "\n");
            if (as_json)
                print_json(out, to_json(result));
            else
                print_result(out, result);
            return 0;
        }
        if (*convert) {
            auto model = load_model_file(map_file);
            if (to == "dsl")
                out << serialize_model(model);
            else
                print_json(out, to_json(model));
            return 0;
        }
        if (*metrics_cmd) {
            auto annotations = annotations_from_json(read_json(annotations_file));
            std::optional<std::vector<ComplexityAnnotation>> complexity;
            if (!complexity_file.empty()) complexity = complexity_from_json(read_json(complexity_file));
            MetricsOptions options;
            options.count_all_citations = all_citations;
            options.system = system;
            auto report = compute_metrics(annotations, complexity, options);
            if (as_json)
                print_json(out, report.to_json());
            else
                out << report.to_text();
            return 0;
        }
        if (*serve_cmd) {
            ServiceConfig effective = config.with_env_overrides();
            if (port) effective.port = *port;
            if (serve_kb) effective.kb_path = *serve_kb;
            if (maps_dir) effective.maps_dir = *maps_dir;
            serve(effective);
            return 0;
        }
        if (*generalize) {
            auto model = load_model_file(map_file);
            TypeHierarchy types;
            if (generalize->count("--kb")) types = KnowledgeBase::load(kb_dir).types();
            auto tmpl = generalize_map(model, types);
            const std::string text = to_json(tmpl).dump(2) + "\n";
            if (!out_file.empty()) write_file(out_file, text);
            out << text;
            return 0;
        }
        if (*instantiate) {
            auto kb = KnowledgeBase::load(kb_dir);
            auto tmpl = template_from_json(read_json(template_file));
            std::map<std::string, std::string> bindings;
            for (const auto& b : binds) {
                auto eq = b.find('=');
                if (eq == std::string::npos) throw InvalidArgument("binding '" + b + "' is not slot=label");
                bindings[b.substr(0, eq)] = b.substr(eq + 1);
            }
            auto model = instantiate_template(tmpl, bindings, kb);
            const std::string text = to_json(model).dump(2) + "\n";
            if (!out_file.empty()) write_file(out_file, text);
            out << text;
            return 0;
        }
    } catch (const CoraError& e) {
        if (as_json) {
            print_json(err, {{"code", e.code()}, {"message", e.what()}, {"detail", e.detail()}});
        } else {
            err << "error: " << e.what() << "\n";
            if (!e.detail().empty() && e.detail() != e.what()) err << e.detail() << (e.detail().back() == '\n' ? "" : "\n");
        }
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << app.help();
    return 2;
}

}  // namespace cora
