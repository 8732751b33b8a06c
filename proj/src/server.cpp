#include "landtriage/server.hpp"

#include <algorithm>
#include <cctype>

#include "httplib.h"

namespace landtriage {

namespace {

ApiRequest to_api_request(const httplib::Request& req) {
  ApiRequest out;
  out.method = req.method;
  out.path = req.path;
  for (const auto& [k, v] : req.params) out.query.emplace(k, v);
  for (const auto& [k, v] : req.headers) {
    std::string name = k;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    out.headers.emplace(std::move(name), v);
  }
  if (req.is_multipart_form_data()) {
    for (const auto& [name, part] : req.files) out.files.emplace(name, part.content);
  } else {
    out.body = req.body;
  }
  return out;
}

}  // namespace

HttpServer::HttpServer(const Api& api) : server_(std::make_unique<httplib::Server>()) {
  auto handler = [&api](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = api.handle(to_api_request(req));
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  const std::string any = R"(/v1/.*)";
  server_->Get(any, handler);
  server_->Post(any, handler);
  server_->set_payload_max_length(256u << 20);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

bool HttpServer::serve() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

}  // namespace landtriage
