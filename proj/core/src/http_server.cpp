#include <httplib.h>

#include "eileen/error.hpp"
#include "eileen/service.hpp"

namespace eileen {

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;

    explicit Impl(Service& s) : service(s) {
        auto handler = [this](httplib::Request const& req, httplib::Response& res) { dispatch(req, res); };
        // Routing and method checks happen in Service::handle.
        server.Get(".*", handler);
        server.Post(".*", handler);
        server.Put(".*", handler);
        server.Delete(".*", handler);
        server.Patch(".*", handler);
    }

    void dispatch(httplib::Request const& req, httplib::Response& res) {
        ApiRequest api;
        api.method = req.method;
        api.path = req.path;
        for (auto const& [key, value] : req.params) api.query.emplace(key, value);
        api.body = req.body;
        auto const auth = req.get_header_value("Authorization");
        if (auth.rfind("Bearer ", 0) == 0) api.bearer = auth.substr(7);
        ApiResponse const out = service.handle(api);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() = default;

int HttpServer::bind(std::string const& host, int port) {
    if (port == 0) {
        int const bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw IoError("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace eileen
