#pragma once

#include <string>

#include "landtriage/dataset.hpp"

namespace landtriage {

// Sends ApiRequests to a running service at `base_url` (e.g. "http://127.0.0.1:8080").
// Requests carrying `files` go out as multipart/form-data. Connection failures
// come back as status 503 with an error body.
Transport http_transport(const std::string& base_url);

// In-process transport over an Api.
Transport local_transport(const Api& api);

}  // namespace landtriage
