#include "ward/httpx.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "ward/error.hpp"

namespace ward::httpx {

void validate_base_url(const std::string& base_url) {
    if (base_url.rfind("http://", 0) != 0)
        raise(ErrorKind::validation, "base_url must be an absolute http:// URL: " + base_url);
    if (base_url.size() <= 7)
        raise(ErrorKind::validation, "base_url missing host: " + base_url);
}

PostResult post_json(const HttpConfig& config, const std::string& path, const nlohmann::json& payload) {
    validate_base_url(config.base_url);
    if (config.timeout_s <= 0) raise(ErrorKind::validation, "timeout_s must be positive");

    const std::string body = payload.dump();
    const int attempts_allowed = config.max_retries + 1;
    std::string last_error;
    bool last_was_server = false;

    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
        if (attempt > 1) {
            double delay = config.backoff_s * static_cast<double>(1 << (attempt - 2));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        httplib::Client client(config.base_url);
        client.set_connection_timeout(std::chrono::duration<double>(config.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(config.timeout_s));
        client.set_write_timeout(std::chrono::duration<double>(config.timeout_s));

        auto res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = "no response from " + config.base_url + path + " (" +
                         httplib::to_string(res.error()) + ")";
            last_was_server = false;
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status) + " from " + path + ": " +
                         res->body.substr(0, 200);
            last_was_server = true;
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            raise(ErrorKind::server, "HTTP " + std::to_string(res->status) + " from " + path + ": " +
                                         res->body.substr(0, 200));
        PostResult out;
        out.attempts = attempt;
        try {
            out.body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorKind::contract, "non-JSON reply from " + path + ": " + e.what());
        }
        return out;
    }
    raise(last_was_server ? ErrorKind::server : ErrorKind::transport,
          "request failed after " + std::to_string(attempts_allowed) + " attempts: " + last_error);
}

}  // namespace ward::httpx
