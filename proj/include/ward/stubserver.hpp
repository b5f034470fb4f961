#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace ward::stubserver {

// Offline stand-in for the model server: embeddings via the hash provider,
// deterministic canned generations keyed off the prompt, and a constant
// external scorer. Fault-injection counters let tests script failures.
struct StubConfig {
    std::size_t embed_dim = 384;
    double score_value = 0.5;
    int fail_first_generate = 0;  // 500s for the first N generate calls
    int fail_first_embed = 0;
    bool empty_generation = false;
};

class StubServer {
public:
    explicit StubServer(StubConfig config = {});
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    int port() const;
    std::string base_url() const;
    // Request paths in arrival order, e.g. "/api/generate".
    std::vector<std::string> request_log() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Reply text the stub would produce for a generation prompt; exposed so
// tests can assert end-to-end outputs without re-deriving the format.
std::string canned_generation(const std::string& prompt);

}  // namespace ward::stubserver
