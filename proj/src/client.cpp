#include "landtriage/client.hpp"

#include <memory>

#include "httplib.h"

namespace landtriage {

namespace {

std::string with_query(const ApiRequest& req) {
  if (req.query.empty()) return req.path;
  httplib::Params params(req.query.begin(), req.query.end());
  return httplib::append_query_params(req.path, params);
}

ApiResponse unreachable(const std::string& base_url, httplib::Error err) {
  nlohmann::json body{{"code", "unreachable"},
                      {"field", "remote"},
                      {"message", "cannot reach " + base_url + ": " + httplib::to_string(err)}};
  return {503, "application/json", body.dump()};
}

}  // namespace

Transport http_transport(const std::string& base_url) {
  auto client = std::make_shared<httplib::Client>(base_url);
  client->set_read_timeout(300, 0);
  client->set_write_timeout(300, 0);
  return [client, base_url](const ApiRequest& req) -> ApiResponse {
    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);
    const std::string target = with_query(req);
    httplib::Result res;
    if (req.method == "GET") {
      res = client->Get(target, headers);
    } else if (!req.files.empty()) {
      httplib::MultipartFormDataItems items;
      for (const auto& [name, content] : req.files) items.push_back({name, content, name, "application/json"});
      res = client->Post(target, headers, items);
    } else {
      res = client->Post(target, headers, req.body, "application/json");
    }
    if (!res) return unreachable(base_url, res.error());
    const auto ct = res->get_header_value("Content-Type");
    return {res->status, ct.empty() ? "application/json" : ct, res->body};
  };
}

Transport local_transport(const Api& api) {
  return [&api](const ApiRequest& req) { return api.handle(req); };
}

}  // namespace landtriage
