#pragma once

#include <memory>
#include <string>

#include "landtriage/api.hpp"

namespace httplib {
class Server;
}

namespace landtriage {

// Serves Api over HTTP. Requests are handled on httplib's worker threads; the
// engine serialises writes.
class HttpServer {
 public:
  explicit HttpServer(const Api& api);
  ~HttpServer();

  // Binds to an ephemeral port and returns it (tests); -1 on failure.
  int bind_any(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  // Blocks until stop().
  bool serve();
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace landtriage
