#pragma once

#include <string>

#include "json.hpp"

namespace landtriage {

// Aligned-column text table for a report body as served by GET /v1/reports/{name}.
std::string render_report_text(const std::string& name, const nlohmann::json& report);
// Flat CSV of the same rows, for plotting tools.
std::string render_report_csv(const std::string& name, const nlohmann::json& report);

}  // namespace landtriage
