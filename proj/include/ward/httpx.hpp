#pragma once

#include <string>

#include "json.hpp"

namespace ward::httpx {

struct HttpConfig {
    std::string base_url;      // http://host:port, no trailing slash needed
    double timeout_s = 30.0;
    int max_retries = 2;       // total attempts = max_retries + 1
    double backoff_s = 0.25;   // doubled after each failed attempt
};

struct PostResult {
    nlohmann::json body;
    int attempts = 1;
};

// POSTs JSON and parses the JSON reply. Connection failures and 5xx replies
// are retried with exponential backoff; 4xx fails immediately as a server
// error carrying a body excerpt. Exhausted retries raise transport (no
// connection) or server (persistent 5xx) errors.
PostResult post_json(const HttpConfig& config, const std::string& path, const nlohmann::json& payload);

void validate_base_url(const std::string& base_url);

}  // namespace ward::httpx
