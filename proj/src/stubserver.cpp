#include "ward/stubserver.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ward/error.hpp"
#include "ward/retrieval.hpp"
#include "ward/rng.hpp"
#include "ward/segmenter.hpp"
#include "ward/text.hpp"

namespace ward::stubserver {
namespace {

using nlohmann::json;

std::vector<std::string> context_words(const std::string& prompt) {
    static const std::string marker = "Patient information: ";
    std::string scope = prompt;
    auto pos = prompt.rfind(marker);
    if (pos != std::string::npos) scope = prompt.substr(pos + marker.size());
    std::vector<std::string> words;
    std::string current;
    for (char c : scope) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            if (current.size() >= 4) words.push_back(current);
            current.clear();
        }
    }
    if (current.size() >= 4) words.push_back(current);
    if (words.empty()) words = {"stable", "course", "managed", "improved"};
    return words;
}

std::string pick(Rng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<std::size_t>(rng.bounded(pool.size()))];
}

std::string fill_sentences(Rng& rng, const std::vector<std::string>& pool, std::size_t target_words) {
    static const std::vector<std::string> frames = {
        "The patient remained stable on {} and {}.",
        "Serial exams showed improving {} without new {}.",
        "Treatment for {} continued alongside monitoring of {}.",
        "By discharge the {} had resolved and {} was controlled.",
        "Labs related to {} and {} trended toward normal.",
    };
    std::string out;
    std::size_t words = 0;
    while (words < target_words) {
        std::string frame = frames[static_cast<std::size_t>(rng.bounded(frames.size()))];
        auto a = frame.find("{}");
        frame = frame.substr(0, a) + pick(rng, pool) + frame.substr(a + 2);
        auto b = frame.find("{}");
        frame = frame.substr(0, b) + pick(rng, pool) + frame.substr(b + 2);
        if (!out.empty()) out.push_back(' ');
        out += frame;
        words = segmenter::word_count(out);
    }
    return out;
}

std::size_t requested_words(const std::string& prompt) {
    auto pos = prompt.find("should be ");
    if (pos == std::string::npos) pos = prompt.find("should be around ");
    if (pos == std::string::npos) return 80;
    pos = prompt.find_first_of("0123456789", pos);
    if (pos == std::string::npos) return 80;
    std::size_t value = 0;
    while (pos < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[pos]))) {
        value = value * 10 + static_cast<std::size_t>(prompt[pos] - '0');
        ++pos;
    }
    if (value == 0) return 80;
    return std::min<std::size_t>(value, 150);
}

}  // namespace

std::string canned_generation(const std::string& prompt) {
    Rng rng(fnv1a64(prompt));
    auto pool = context_words(prompt);
    std::size_t budget = requested_words(prompt);
    bool di = prompt.find("\"Discharge Instructions\"") != std::string::npos;
    std::ostringstream out;
    if (di) {
        out << "Dear ___,\n\n";
        out << "It was a pleasure taking care of you at ___.\n\n";
        out << "WHY WAS I ADMITTED TO THE HOSPITAL?\n";
        out << "- You were admitted because of " << pick(rng, pool) << " and " << pick(rng, pool)
            << ".\n\n";
        out << "WHAT HAPPENED IN THE HOSPITAL?\n";
        out << "- " << fill_sentences(rng, pool, budget / 2) << "\n\n";
        out << "WHAT SHOULD I DO WHEN I GO HOME?\n";
        out << "- Please take your medications as prescribed.\n";
        out << "- " << fill_sentences(rng, pool, budget / 4) << "\n\n";
        out << "We wish you the best!\n";
        out << "Your ___ Team";
    } else {
        out << "Brief hospital course:\n";
        out << "___ presented with " << pick(rng, pool) << " and " << pick(rng, pool) << ". ";
        out << fill_sentences(rng, pool, budget);
    }
    return out.str();
}

struct StubServer::Impl {
    StubConfig config;
    httplib::Server server;
    std::thread worker;
    int port = 0;
    std::atomic<int> generate_fails{0};
    std::atomic<int> embed_fails{0};
    mutable std::mutex log_mutex;
    std::vector<std::string> log;

    void record(const std::string& path) {
        std::lock_guard<std::mutex> guard(log_mutex);
        log.push_back(path);
    }
};

StubServer::StubServer(StubConfig config) : impl_(std::make_unique<Impl>()) {
    impl_->config = config;
    impl_->generate_fails = config.fail_first_generate;
    impl_->embed_fails = config.fail_first_embed;

    auto reply = [](httplib::Response& res, const json& body) {
        res.set_content(body.dump(), "application/json");
    };
    auto fail = [&reply](httplib::Response& res, int status, const std::string& message) {
        res.status = status;
        reply(res, json{{"error", message}});
    };

    impl_->server.Post(
        "/api/embeddings", [this, reply, fail](const httplib::Request& req, httplib::Response& res) {
            impl_->record("/api/embeddings");
            if (impl_->embed_fails.fetch_sub(1) > 0) return fail(res, 500, "injected failure");
            json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("prompt") || !body["prompt"].is_string())
                return fail(res, 400, "missing prompt");
            try {
                retrieval::HashEmbeddingProvider provider(impl_->config.embed_dim);
                reply(res, json{{"embedding", provider.embed(body["prompt"].get<std::string>())}});
            } catch (const Error& e) {
                fail(res, 400, e.what());
            }
        });

    impl_->server.Post(
        "/api/generate", [this, reply, fail](const httplib::Request& req, httplib::Response& res) {
            impl_->record("/api/generate");
            if (impl_->generate_fails.fetch_sub(1) > 0) return fail(res, 500, "injected failure");
            json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("prompt") || !body["prompt"].is_string())
                return fail(res, 400, "missing prompt");
            if (impl_->config.empty_generation) return reply(res, json{{"response", ""}});
            reply(res, json{{"response", canned_generation(body["prompt"].get<std::string>())}});
        });

    impl_->server.Post("/score", [this, reply, fail](const httplib::Request& req, httplib::Response& res) {
        impl_->record("/score");
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("hypothesis") || !body.contains("reference"))
            return fail(res, 400, "missing fields");
        reply(res, json{{"score", impl_->config.score_value}});
    });

    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) raise(ErrorKind::io, "stub server could not bind a local port");
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    for (int i = 0; i < 2000 && !impl_->server.is_running(); ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    if (!impl_->server.is_running()) raise(ErrorKind::io, "stub server failed to start");
}

StubServer::~StubServer() { stop(); }

int StubServer::port() const { return impl_->port; }

std::string StubServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

std::vector<std::string> StubServer::request_log() const {
    std::lock_guard<std::mutex> guard(impl_->log_mutex);
    return impl_->log;
}

void StubServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace ward::stubserver
