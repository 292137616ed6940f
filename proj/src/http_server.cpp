#include <iostream>

#include "cora/errors.hpp"
#include "cora/service.hpp"
#include "httplib.h"

namespace cora {

struct HttpServer::Impl {
    Impl(KnowledgeBase kb, const std::filesystem::path& maps_dir) : service(std::move(kb), maps_dir) {}
    Service service;
    httplib::Server server;
    int port = 0;
};

namespace {

KnowledgeBase open_kb(const ServiceConfig& config) {
    std::error_code ec;
    if (!std::filesystem::is_directory(config.kb_path, ec))
        throw StorageError("knowledge base path " + config.kb_path.string() + " is not a directory");
    KnowledgeBase kb = KnowledgeBase::open(config.kb_path);
    for (const auto& r : kb.load_report().rejection_reasons)
        std::cerr << "kb: skipped line " << r.line << ": " << r.reason << "\n";
    return kb;
}

}  // namespace

HttpServer::HttpServer(const ServiceConfig& config) : impl_(std::make_unique<Impl>(open_kb(config), config.maps_dir)) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
        Response r = impl_->service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto& server = impl_->server;
    server.Get(".*", dispatch);
    server.Post(".*", dispatch);
    server.Patch(".*", dispatch);
    server.Put(".*", dispatch);
    server.Delete(".*", dispatch);

    if (config.port == 0)
        impl_->port = server.bind_to_any_port(config.host);
    else
        impl_->port = server.bind_to_port(config.host, config.port) ? config.port : -1;
    if (impl_->port <= 0)
        throw StorageError("cannot listen on " + config.host + ":" + std::to_string(config.port));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::port() const { return impl_->port; }

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

void serve(const ServiceConfig& config) {
    HttpServer server(config);
    std::cerr << "serving on " << config.host << ":" << server.port() << " (kb " << config.kb_path.string() << ")\n";
    server.run();
}

}  // namespace cora
