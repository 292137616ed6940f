#pragma once
// HTTP/JSON service: KB ingestion, map building, inference, what-if sessions
// and saved-map persistence. Service::handle is the transport-free core;
// serve() binds it to an HTTP listener.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cora/causal_model.hpp"
#include "cora/graph_builder.hpp"
#include "cora/inference.hpp"
#include "cora/knowledge_store.hpp"
#include "json.hpp"

namespace cora {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path kb_path = "kb";
    std::filesystem::path maps_dir = "maps";

    // Applies CORA_PORT, CORA_KB and CORA_MAPS when set.
    ServiceConfig with_env_overrides() const;
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

// Error body {code, message, detail} with the matching HTTP status.
Response error_response(const CoraError& e);
int http_status(const std::string& code);

// A persisted map: the MapDocument plus session bookkeeping.
struct StoredMap {
    std::string map_id;
    std::uint64_t revision = 0;
    CausalModel model;
    std::optional<InferenceResult> last_result;
};

nlohmann::json to_json(const StoredMap& map);
StoredMap stored_map_from_json(const nlohmann::json& doc);

// {map_id}.json files under one directory. Writes go to a temporary file
// that is renamed into place, so readers never see a partial document.
class MapStore {
public:
    explicit MapStore(std::filesystem::path dir);

    void save(const StoredMap& map) const;
    StoredMap load(const std::string& map_id) const;  // NotFound when absent
    bool exists(const std::string& map_id) const;
    std::vector<std::string> list() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path path_of(const std::string& map_id) const;
    std::filesystem::path dir_;
};

// Content hash of the canonical MapDocument.
std::string content_map_id(const CausalModel& model);

struct MapSession {
    std::string map_id;
    CausalModel model;
    std::uint64_t revision = 0;
    std::optional<InferenceResult> last_result;
    InferenceParams params;
    bool saved = false;
    std::mutex mu;  // serializes edits against this map
};

class Service {
public:
    Service(KnowledgeBase kb, std::filesystem::path maps_dir);

    // Routes one request. Never throws; failures become error bodies.
    Response handle(const std::string& method, const std::string& path, const std::string& body);

    std::size_t kb_events() const;

private:
    Response route(const std::string& method, const std::vector<std::string>& parts, const nlohmann::json& body,
                   const std::string& raw_body);

    Response health() const;
    Response ingest(const nlohmann::json& body, const std::string& raw_body);
    Response build(const nlohmann::json& body);
    Response get_map(const std::string& id);
    Response infer_map(const std::string& id, const nlohmann::json& body);
    Response whatif_map(const std::string& id, const nlohmann::json& body);
    Response patch_map(const std::string& id, const nlohmann::json& body);
    Response save_map(const std::string& id);
    Response list_maps();
    Response instantiate(const nlohmann::json& body);
    Response metrics(const nlohmann::json& body);

    std::shared_ptr<MapSession> session(const std::string& id);
    std::string fresh_id(const CausalModel& model);

    mutable std::shared_mutex kb_mu_;
    KnowledgeBase kb_;
    MapStore store_;
    std::mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<MapSession>> sessions_;
};

InferenceParams inference_params_from_json(const nlohmann::json& doc, InferenceParams base = {});
SearchParams search_params_from_json(const nlohmann::json& doc, SearchParams base = {});
// Accepts "label" or {"concept": "label", "value": "increasing"} entries.
std::vector<SourceSpec> source_specs_from_json(const nlohmann::json& doc);

// HTTP listener around a Service. Port 0 binds an ephemeral port. Throws
// StorageError when the KB path is not a directory or the port is taken.
class HttpServer {
public:
    explicit HttpServer(const ServiceConfig& config);
    ~HttpServer();

    int port() const;
    void run();   // blocks until stop()
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Blocks serving HTTP until the process is stopped.
void serve(const ServiceConfig& config);

}  // namespace cora
