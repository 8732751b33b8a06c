#pragma once

#include <map>
#include <string>

#include "json.hpp"
#include "landtriage/engine.hpp"

namespace landtriage {

struct ApiRequest {
  std::string method;  // GET, POST
  std::string path;    // e.g. /v1/runs/R01/detections
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // names lower-cased
  std::string body;
  // Multipart parts by name (registry upload).
  std::map<std::string, std::string> files;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

// Transport-free endpoint dispatcher shared by the HTTP server and the local CLI.
class Api {
 public:
  explicit Api(Engine& engine) : engine_(engine) {}

  ApiResponse handle(const ApiRequest& req) const;

  // Names accepted by GET /v1/reports/{name}.
  static const std::vector<std::string>& report_names();

 private:
  ApiResponse dispatch(const ApiRequest& req) const;
  nlohmann::json report(const std::string& name, const std::map<std::string, std::string>& q) const;

  Engine& engine_;
};

int http_status(ErrorKind kind);

}  // namespace landtriage
