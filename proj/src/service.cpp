#include "cora/service.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cora/errors.hpp"
#include "cora/metrics.hpp"
#include "cora/text.hpp"

namespace cora {

using nlohmann::json;
namespace fs = std::filesystem;

ServiceConfig ServiceConfig::with_env_overrides() const {
    ServiceConfig c = *this;
    if (const char* port = std::getenv("CORA_PORT")) {
        try {
            c.port = std::stoi(port);
        } catch (const std::exception&) {
            throw InvalidArgument(std::string("CORA_PORT is not a number: ") + port);
        }
    }
    if (const char* kb = std::getenv("CORA_KB")) c.kb_path = kb;
    if (const char* maps = std::getenv("CORA_MAPS")) c.maps_dir = maps;
    return c;
}

int http_status(const std::string& code) {
    if (code == "invalid_argument" || code == "schema_error" || code == "invalid_json") return 400;
    if (code == "not_found") return 404;
    if (code == "method_not_allowed") return 405;
    if (code == "conflict") return 409;
    if (code == "edit_rejected") return 422;
    if (code == "not_implemented") return 501;
    return 500;
}

Response error_response(const CoraError& e) {
    return {http_status(e.code()), json{{"code", e.code()}, {"message", e.what()}, {"detail", e.detail()}}};
}

// ---------------------------------------------------------------- storage

json to_json(const StoredMap& map) {
    json doc = to_json(map.model);
    doc["map_id"] = map.map_id;
    doc["revision"] = map.revision;
    doc["last_result"] = map.last_result ? to_json(*map.last_result) : json(nullptr);
    return doc;
}

StoredMap stored_map_from_json(const json& doc) {
    StoredMap map;
    if (!doc.is_object() || !doc.contains("map_id") || !doc["map_id"].is_string())
        throw SchemaError("$.map_id", "expected a string");
    map.map_id = doc["map_id"].get<std::string>();
    if (doc.contains("revision")) {
        if (!doc["revision"].is_number_unsigned()) throw SchemaError("$.revision", "expected a non-negative integer");
        map.revision = doc["revision"].get<std::uint64_t>();
    }
    map.model = from_json(doc);
    if (doc.contains("last_result") && !doc["last_result"].is_null())
        map.last_result = inference_result_from_json(doc["last_result"]);
    return map;
}

MapStore::MapStore(fs::path dir) : dir_(std::move(dir)) {}

fs::path MapStore::path_of(const std::string& map_id) const {
    if (map_id.empty() || map_id.find_first_not_of("0123456789abcdefghijklmnopqrstuvwxyz-_") != std::string::npos)
        throw InvalidArgument("malformed map id '" + map_id + "'");
    return dir_ / (map_id + ".json");
}

void MapStore::save(const StoredMap& map) const {
    const fs::path target = path_of(map.map_id);
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw StorageError("cannot create maps directory " + dir_.string(), ec.message());
    static std::atomic<unsigned> counter{0};
    const fs::path tmp = dir_ / ("." + map.map_id + ".tmp" + std::to_string(counter++));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + tmp.string());
        out << to_json(map).dump(2) << "\n";
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            throw StorageError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw StorageError("cannot move saved map into place at " + target.string(), ec.message());
    }
}

StoredMap MapStore::load(const std::string& map_id) const {
    const fs::path p = path_of(map_id);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFound("no saved map '" + map_id + "'", map_id);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw StorageError("saved map " + p.string() + " is not valid JSON");
    StoredMap map = stored_map_from_json(doc);
    if (map.map_id != map_id) throw StorageError("saved map " + p.string() + " carries id " + map.map_id);
    return map;
}

bool MapStore::exists(const std::string& map_id) const {
    std::error_code ec;
    return fs::is_regular_file(path_of(map_id), ec);
}

std::vector<std::string> MapStore::list() const {
    std::vector<std::string> out;
    std::error_code ec;
    if (!fs::is_directory(dir_, ec)) return out;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        const auto name = entry.path().filename().string();
        if (name.empty() || name[0] == '.' || entry.path().extension() != ".json") continue;
        out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string content_map_id(const CausalModel& model) { return stable_hash_hex(to_json(canonicalize(model)).dump()); }

// ---------------------------------------------------------------- request parsing

InferenceParams inference_params_from_json(const json& doc, InferenceParams base) {
    if (doc.is_null()) return base;
    if (!doc.is_object()) throw SchemaError("$.inference", "expected an object");
    if (doc.contains("tau")) {
        if (!doc["tau"].is_number()) throw SchemaError("$.inference.tau", "expected a number");
        base.tau = doc["tau"].get<double>();
    }
    if (doc.contains("max_path_len")) {
        if (!doc["max_path_len"].is_number_integer()) throw SchemaError("$.inference.max_path_len", "expected an integer");
        base.max_path_len = doc["max_path_len"].get<int>();
    }
    if (doc.contains("explain_top_k")) {
        if (!doc["explain_top_k"].is_number_unsigned())
            throw SchemaError("$.inference.explain_top_k", "expected a non-negative integer");
        base.explain_top_k = doc["explain_top_k"].get<std::size_t>();
    }
    check_params(base);
    return base;
}

SearchParams search_params_from_json(const json& doc, SearchParams base) {
    if (doc.is_null()) return base;
    if (!doc.is_object()) throw SchemaError("$.search", "expected an object");
    if (doc.contains("max_hops")) {
        if (!doc["max_hops"].is_number_integer()) throw SchemaError("$.search.max_hops", "expected an integer");
        base.max_hops = doc["max_hops"].get<int>();
    }
    if (doc.contains("beam_width")) {
        if (!doc["beam_width"].is_number_unsigned())
            throw SchemaError("$.search.beam_width", "expected a non-negative integer");
        base.beam_width = doc["beam_width"].get<std::size_t>();
    }
    if (doc.contains("top_k")) {
        if (doc["top_k"].is_null())
            base.top_k.reset();
        else if (doc["top_k"].is_number_unsigned())
            base.top_k = doc["top_k"].get<std::size_t>();
        else
            throw SchemaError("$.search.top_k", "expected a positive integer or null");
    }
    if (doc.contains("heuristic")) {
        if (!doc["heuristic"].is_string()) throw SchemaError("$.search.heuristic", "expected a string");
        base.heuristic = doc["heuristic"].get<std::string>();
    }
    if (doc.contains("min_confidence")) {
        if (!doc["min_confidence"].is_number()) throw SchemaError("$.search.min_confidence", "expected a number");
        base.min_confidence = doc["min_confidence"].get<double>();
    }
    return base;
}

std::vector<SourceSpec> source_specs_from_json(const json& doc) {
    if (!doc.is_array()) throw SchemaError("$.sources", "expected an array");
    std::vector<SourceSpec> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string path = "$.sources[" + std::to_string(i) + "]";
        const json& s = doc[i];
        if (s.is_string()) {
            out.push_back({s.get<std::string>(), std::nullopt});
            continue;
        }
        if (!s.is_object() || !s.contains("concept") || !s["concept"].is_string())
            throw SchemaError(path, "expected a concept label or {concept, value}");
        SourceSpec spec{s["concept"].get<std::string>(), std::nullopt};
        if (s.contains("value")) {
            if (!s["value"].is_string()) throw SchemaError(path + ".value", "expected a string");
            try {
                spec.value = assumed_value_from_string(s["value"].get<std::string>());
            } catch (const InvalidArgument& e) {
                throw SchemaError(path + ".value", e.what());
            }
        }
        out.push_back(std::move(spec));
    }
    return out;
}

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string clean = path.substr(0, path.find('?'));
    std::stringstream in(clean);
    std::string part;
    while (std::getline(in, part, '/'))
        if (!part.empty()) parts.push_back(part);
    return parts;
}

const json& field(const json& body, const char* key) {
    static const json null_value;
    if (body.is_object() && body.contains(key)) return body[key];
    return null_value;
}

json paths_json(const std::vector<EvidencedPath>& paths) {
    json out = json::array();
    for (const auto& p : paths)
        out.push_back({{"source", p.source}, {"nodes", p.nodes}, {"edges", p.edges}, {"strength", p.strength}});
    return out;
}

json session_json(const MapSession& s) {
    return json{{"map_id", s.map_id},
                {"revision", s.revision},
                {"saved", s.saved},
                {"map", to_json(s.model)},
                {"last_result", s.last_result ? to_json(*s.last_result) : json(nullptr)}};
}

StoredMap snapshot(const MapSession& s) { return {s.map_id, s.revision, s.model, s.last_result}; }

}  // namespace

// ---------------------------------------------------------------- service

Service::Service(KnowledgeBase kb, fs::path maps_dir) : kb_(std::move(kb)), store_(std::move(maps_dir)) {}

std::size_t Service::kb_events() const {
    std::shared_lock lock(kb_mu_);
    return kb_.events().size();
}

Response Service::handle(const std::string& method, const std::string& path, const std::string& body) {
    try {
        json parsed;
        if (!body.empty()) {
            parsed = json::parse(body, nullptr, false);
            if (parsed.is_discarded()) {
                // only ingestion accepts a raw JSONL stream
                if (!(method == "POST" && split_path(path) == std::vector<std::string>{"kb", "ingest"}))
                    throw CoraError("invalid_json", "request body is not valid JSON");
                parsed = json();
            }
        }
        return route(method, split_path(path), parsed, body);
    } catch (const CoraError& e) {
        return error_response(e);
    } catch (const json::exception& e) {
        return error_response(SchemaError("$", e.what()));
    } catch (const std::exception& e) {
        return error_response(CoraError("internal", e.what()));
    }
}

Response Service::route(const std::string& method, const std::vector<std::string>& parts, const json& body,
                        const std::string& raw_body) {
    auto is = [&](std::initializer_list<const char*> want) {
        if (parts.size() != want.size()) return false;
        std::size_t i = 0;
        for (const char* w : want) {
            if (std::string(w) != "*" && parts[i] != w) return false;
            ++i;
        }
        return true;
    };
    auto require = [&](const char* allowed) {
        if (method != allowed) throw CoraError("method_not_allowed", "method " + method + " not allowed here");
    };

    if (is({"health"})) return require("GET"), health();
    if (is({"kb", "ingest"})) return require("POST"), ingest(body, raw_body);
    if (is({"maps", "build"})) return require("POST"), build(body);
    if (is({"maps"})) return require("GET"), list_maps();
    if (is({"maps", "*"})) {
        if (method == "GET") return get_map(parts[1]);
        if (method == "PATCH") return patch_map(parts[1], body);
        throw CoraError("method_not_allowed", "method " + method + " not allowed here");
    }
    if (is({"maps", "*", "infer"})) return require("POST"), infer_map(parts[1], body);
    if (is({"maps", "*", "whatif"})) return require("POST"), whatif_map(parts[1], body);
    if (is({"maps", "*", "save"})) return require("POST"), save_map(parts[1]);
    if (is({"templates", "instantiate"})) return require("POST"), instantiate(body);
    if (is({"metrics"})) return require("POST"), metrics(body);
    if (is({"interpret"}))
        throw CoraError("not_implemented",
                        "free-text query interpretation is not available; call /maps/build with concepts");
    std::string joined;
    for (const auto& p : parts) joined += "/" + p;
    throw NotFound("no route for " + method + " " + (joined.empty() ? "/" : joined));
}

Response Service::health() const { return {200, json{{"status", "ok"}, {"kb_events", kb_events()}}}; }

Response Service::ingest(const json& body, const std::string& raw_body) {
    std::unique_lock lock(kb_mu_);
    IngestReport report;
    if (body.is_array() || (body.is_object() && body.contains("events"))) {
        const json& list = body.is_array() ? body : body["events"];
        if (!list.is_array()) throw SchemaError("$.events", "expected an array");
        report = ingest_records(std::vector<json>(list.begin(), list.end()), kb_);
    } else if (body.is_object()) {
        report = ingest_records({body}, kb_);
    } else {
        std::istringstream in(raw_body);
        report = ingest_events(in, kb_);
    }
    return {200, report.to_json()};
}

std::string Service::fresh_id(const CausalModel& model) {
    const std::string base = content_map_id(model);
    std::string id = base;
    for (int n = 1; sessions_.count(id) || store_.exists(id); ++n) id = base + "-" + std::to_string(n);
    return id;
}

Response Service::build(const json& body) {
    if (!body.is_object()) throw SchemaError("$", "expected an object");
    if (!body.contains("target") || !body["target"].is_string()) throw SchemaError("$.target", "expected a string");
    auto sources = source_specs_from_json(field(body, "sources"));
    auto search = search_params_from_json(field(body, "search"));
    auto params = inference_params_from_json(field(body, "inference"));

    BuildResult built;
    {
        std::shared_lock lock(kb_mu_);
        built = build_map(kb_, sources, body["target"].get<std::string>(), search);
    }
    if (const json& merge = field(body, "merge_with"); !merge.is_null()) {
        if (!merge.is_string()) throw SchemaError("$.merge_with", "expected a map id");
        StoredMap saved = store_.load(merge.get<std::string>());
        auto merged = merge_saved_map(built.model, saved.model);
        built.model = std::move(merged.model);
        for (auto& c : merged.conflicts) built.diagnostics.messages.push_back(std::move(c));
    }
    auto result = infer(built.model, params);

    auto s = std::make_shared<MapSession>();
    s->model = built.model;
    s->last_result = result;
    s->params = params;
    {
        std::lock_guard lock(sessions_mu_);
        s->map_id = fresh_id(built.model);
        sessions_[s->map_id] = s;
    }
    return {200, json{{"map_id", s->map_id},
                      {"revision", 0},
                      {"map", to_json(built.model)},
                      {"result", to_json(result)},
                      {"diagnostics", built.diagnostics.to_json()},
                      {"paths", paths_json(built.paths)}}};
}

std::shared_ptr<MapSession> Service::session(const std::string& id) {
    std::lock_guard lock(sessions_mu_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    StoredMap stored = store_.load(id);
    auto s = std::make_shared<MapSession>();
    s->map_id = stored.map_id;
    s->model = std::move(stored.model);
    s->revision = stored.revision;
    s->last_result = std::move(stored.last_result);
    if (s->last_result) {
        s->params.tau = s->last_result->verdict.tau;
        if (s->last_result->provenance.contains("max_path_len"))
            s->params.max_path_len = s->last_result->provenance["max_path_len"].get<int>();
    }
    s->saved = true;
    sessions_[id] = s;
    return s;
}

Response Service::get_map(const std::string& id) {
    auto s = session(id);
    std::lock_guard lock(s->mu);
    return {200, session_json(*s)};
}

Response Service::infer_map(const std::string& id, const json& body) {
    auto s = session(id);
    std::lock_guard lock(s->mu);
    auto params = inference_params_from_json(body.is_object() && body.contains("inference") ? body["inference"] : body,
                                             s->params);
    auto result = infer(s->model, params);
    s->params = params;
    s->last_result = result;
    return {200, to_json(result)};
}

Response Service::whatif_map(const std::string& id, const json& body) {
    auto s = session(id);
    std::lock_guard lock(s->mu);
    const json& edits_doc = body.is_object() ? field(body, "edits") : body;
    EditSet edits = edits_doc.is_null() ? EditSet{} : edits_from_json(edits_doc);
    const bool custom_params = body.is_object() && body.contains("inference");
    auto params = custom_params ? inference_params_from_json(body["inference"], s->params) : s->params;
    if (edits.empty() && !custom_params && s->last_result) return {200, to_json(*s->last_result)};
    return {200, to_json(whatif(s->model, edits, params))};
}

Response Service::patch_map(const std::string& id, const json& body) {
    if (!body.is_object()) throw SchemaError("$", "expected an object");
    if (!body.contains("expected_revision") || !body["expected_revision"].is_number_unsigned())
        throw SchemaError("$.expected_revision", "expected a non-negative integer");
    if (!body.contains("edits")) throw SchemaError("$.edits", "missing required field");
    EditSet edits = edits_from_json(body["edits"]);
    const auto expected = body["expected_revision"].get<std::uint64_t>();

    auto s = session(id);
    std::lock_guard lock(s->mu);
    if (expected != s->revision)
        throw Conflict("map " + id + " is at revision " + std::to_string(s->revision) + ", not " +
                           std::to_string(expected),
                       std::to_string(s->revision));
    CausalModel edited = apply_edits(s->model, edits);
    auto result = infer(edited, s->params);
    s->model = std::move(edited);
    s->last_result = result;
    ++s->revision;
    if (s->saved) store_.save(snapshot(*s));
    return {200, json{{"map_id", s->map_id},
                      {"revision", s->revision},
                      {"map", to_json(s->model)},
                      {"result", to_json(result)}}};
}

Response Service::save_map(const std::string& id) {
    auto s = session(id);
    std::lock_guard lock(s->mu);
    store_.save(snapshot(*s));
    s->saved = true;
    return {200, json{{"map_id", s->map_id}, {"revision", s->revision}, {"saved", true}}};
}

Response Service::list_maps() {
    std::map<std::string, json> entries;
    for (const auto& id : store_.list()) entries[id] = {{"map_id", id}, {"saved", true}};
    std::vector<std::shared_ptr<MapSession>> live;
    {
        std::lock_guard lock(sessions_mu_);
        for (const auto& [id, s] : sessions_) live.push_back(s);
    }
    for (const auto& s : live) {
        std::lock_guard lock(s->mu);
        json& e = entries[s->map_id];
        e["map_id"] = s->map_id;
        e["saved"] = s->saved || store_.exists(s->map_id);
        e["revision"] = s->revision;
        e["target"] = s->model.scenario ? json(s->model.scenario->target) : json(nullptr);
    }
    json out = json::array();
    for (auto& [id, e] : entries) out.push_back(std::move(e));
    return {200, json{{"maps", out}}};
}

Response Service::instantiate(const json& body) {
    if (!body.is_object()) throw SchemaError("$", "expected an object");
    if (!body.contains("template")) throw SchemaError("$.template", "missing required field");
    Template tmpl = template_from_json(body["template"]);
    const json& b = field(body, "bindings");
    if (!b.is_object()) throw SchemaError("$.bindings", "expected an object of slot -> concept");
    std::map<std::string, std::string> bindings;
    for (const auto& [slot, label] : b.items()) {
        if (!label.is_string()) throw SchemaError("$.bindings." + slot, "expected a string");
        bindings[slot] = label.get<std::string>();
    }
    CausalModel model;
    {
        std::shared_lock lock(kb_mu_);
        model = instantiate_template(tmpl, bindings, kb_);
    }
    return {200, json{{"map", to_json(model)}}};
}

Response Service::metrics(const json& body) {
    if (!body.is_object()) throw SchemaError("$", "expected an object");
    if (!body.contains("annotations")) throw SchemaError("$.annotations", "missing required field");
    auto annotations = annotations_from_json(body["annotations"]);
    std::optional<std::vector<ComplexityAnnotation>> complexity;
    if (const json& c = field(body, "complexity"); !c.is_null()) complexity = complexity_from_json(c);
    MetricsOptions options;
    if (const json& all = field(body, "count_all_citations"); !all.is_null()) {
        if (!all.is_boolean()) throw SchemaError("$.count_all_citations", "expected a boolean");
        options.count_all_citations = all.get<bool>();
    }
    if (const json& sys = field(body, "system"); !sys.is_null()) {
        if (!sys.is_string()) throw SchemaError("$.system", "expected a string");
        options.system = sys.get<std::string>();
    }
    return {200, compute_metrics(annotations, complexity, options).to_json()};
}

}  // namespace cora
