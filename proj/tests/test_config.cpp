#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "ward/config.hpp"
#include "ward/error.hpp"

using namespace ward;
using namespace ward::config;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ErrorKind thrown_kind(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a ward::Error");
    return ErrorKind::validation;
}

std::string thrown_message(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    FAIL("expected a ward::Error");
    return {};
}

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& content) {
        path = fs::temp_directory_path() /
               ("ward_cfg_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".conf");
        std::ofstream(path) << content;
    }
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
};

struct EnvGuard {
    std::string name;
    EnvGuard(const std::string& var, const std::string& value) : name(var) {
        setenv(name.c_str(), value.c_str(), 1);
    }
    ~EnvGuard() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("defaults stand when no file, env, or flags are given") {
    auto cfg = load_config("");
    CHECK(cfg.seed == 0);
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.tasks == std::vector<Task>{Task::bhc, Task::di});
    CHECK(cfg.strategy == retrieval::WordCountSource::retrieved);
    CHECK(cfg.retrieval.provider == "hash");
    CHECK(cfg.retrieval.embed_dim == 384);
    CHECK(cfg.retrieval.exclude_self);
    CHECK(cfg.generation.model_id == "llama3:8b-instruct-q8_0");
    CHECK(cfg.generation.base_url == "http://127.0.0.1:11434");
    CHECK(cfg.generation.temperature == 0.0);
    CHECK(cfg.wordcount.trees == 100);
    CHECK(cfg.wordcount.depth == 12);

    // path fallbacks hang off the out dir
    CHECK(data_dir(cfg) == "out/data");
    CHECK(index_path(cfg, Task::bhc) == "out/bhc_index.wsix");
    CHECK(index_path(cfg, Task::di) == "out/di_index.wsix");
    CHECK(wc_model_path(cfg, Task::bhc) == "out/wc_bhc.json");
    CHECK(wc_model_path(cfg, Task::di) == "out/wc_di.json");
}

TEST_CASE("explicit paths win over the out-dir fallbacks") {
    auto cfg = default_config();
    cfg.data_dir = "/fixtures/mimic";
    cfg.retrieval.bhc_index = "/idx/custom.wsix";
    cfg.wordcount.di_model = "/models/di.json";
    CHECK(data_dir(cfg) == "/fixtures/mimic");
    CHECK(index_path(cfg, Task::bhc) == "/idx/custom.wsix");
    CHECK(index_path(cfg, Task::di) == "out/di_index.wsix");
    CHECK(wc_model_path(cfg, Task::di) == "/models/di.json");
}

TEST_CASE("file values are parsed with comments, quoting, and escapes") {
    TempFile file(
        "# master settings\n"
        "seed = 99\n"
        "\n"
        "out = \"run dir\"      # quoted to keep the space\n"
        "generation.model_id = \"m:\\\"tag\\\"\\n\"\n"
        "generation.temperature = 0.25\n"
        "retrieval.exclude_self = false\n"
        "tasks = di\n"
        "strategy = distribution\n");
    auto cfg = load_config(file.path.string());
    CHECK(cfg.seed == 99);
    CHECK(cfg.out_dir == "run dir");
    CHECK(cfg.generation.model_id == "m:\"tag\"\n");
    CHECK(cfg.generation.temperature == 0.25);
    CHECK_FALSE(cfg.retrieval.exclude_self);
    CHECK(cfg.tasks == std::vector<Task>{Task::di});
    CHECK(cfg.strategy == retrieval::WordCountSource::distribution);
}

TEST_CASE("a hash inside a quoted value is not a comment") {
    auto entries = parse_config_file("out = \"a#b\" # real comment\nseed = 3\n");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0] == std::pair<std::string, std::string>{"out", "a#b"});
    CHECK(entries[1] == std::pair<std::string, std::string>{"seed", "3"});
}

TEST_CASE("flags beat env vars which beat the file") {
    TempFile file("seed = 1\nout = from_file\n");
    EnvGuard seed_env("WARD_SEED", "2");
    EnvGuard out_env("WARD_OUT", "from_env");

    SUBCASE("env over file") {
        auto cfg = load_config(file.path.string());
        CHECK(cfg.seed == 2);
        CHECK(cfg.out_dir == "from_env");
    }
    SUBCASE("flags over env") {
        auto cfg = load_config(file.path.string(), {{"seed", "3"}, {"out", "from_flag"}});
        CHECK(cfg.seed == 3);
        CHECK(cfg.out_dir == "from_flag");
    }
}

TEST_CASE("unknown keys are rejected and named") {
    auto cfg = default_config();
    CHECK(thrown_kind([&] { apply_kv(cfg, "modle", "x", "flag"); }) == ErrorKind::config);
    auto message = thrown_message([&] { apply_kv(cfg, "modle", "x", "flag"); });
    CHECK(message.find("modle") != std::string::npos);
    CHECK(message.find("flag") != std::string::npos);

    TempFile file("generation.baseurl = http://x\n");
    auto file_message = thrown_message([&] { load_config(file.path.string()); });
    CHECK(file_message.find("generation.baseurl") != std::string::npos);
}

TEST_CASE("type mismatches name the expected type") {
    auto cfg = default_config();
    struct Case {
        const char* key;
        const char* value;
        const char* expected;
    };
    for (Case c : {Case{"seed", "-4", "non-negative integer"},
                   Case{"generation.temperature", "warm", "number"},
                   Case{"retrieval.exclude_self", "yes", "true or false"},
                   Case{"wordcount.trees", "many", "non-negative integer"}}) {
        CAPTURE(c.key);
        CHECK(thrown_kind([&] { apply_kv(cfg, c.key, c.value, "test"); }) == ErrorKind::config);
        auto message = thrown_message([&] { apply_kv(cfg, c.key, c.value, "test"); });
        CHECK(message.find(c.expected) != std::string::npos);
        CHECK(message.find(c.key) != std::string::npos);
    }
    // domain parsers keep their own richer errors
    CHECK(thrown_kind([&] { apply_kv(cfg, "strategy", "psychic", "test"); }) ==
          ErrorKind::validation);
    CHECK(thrown_kind([&] { apply_kv(cfg, "retrieval.provider", "carrier-pigeon", "test"); }) ==
          ErrorKind::config);
}

TEST_CASE("parse errors carry line numbers") {
    auto no_equals = thrown_message([] { parse_config_file("seed = 1\njust words\n"); });
    CHECK(no_equals.find("line 2") != std::string::npos);
    CHECK(thrown_kind([] { parse_config_file("out = \"unterminated\n"); }) == ErrorKind::config);
    auto unterminated = thrown_message([] { parse_config_file("seed = 1\nout = \"oops\n"); });
    CHECK(unterminated.find("line 2") != std::string::npos);
    auto empty_key = thrown_message([] { parse_config_file(" = 5\n"); });
    CHECK(empty_key.find("line 1") != std::string::npos);
    auto trailing = thrown_message([] { parse_config_file("out = \"a\" b\n"); });
    CHECK(trailing.find("line 1") != std::string::npos);
}

TEST_CASE("a missing config file named explicitly is an error") {
    CHECK(thrown_kind([] { load_config("/nonexistent/ward.conf"); }) == ErrorKind::io);
}

TEST_CASE("env var names derive from the dotted key") {
    CHECK(env_var_for("generation.model_id") == "WARD_GENERATION_MODEL_ID");
    CHECK(env_var_for("seed") == "WARD_SEED");
    CHECK(env_var_for("retrieval.embed_dim") == "WARD_RETRIEVAL_EMBED_DIM");
    for (const auto& key : known_keys()) {
        CAPTURE(key);
        CHECK(env_var_for(key).rfind("WARD_", 0) == 0);
    }
    CHECK(known_keys().size() > 25);
}

TEST_CASE("task lists parse with both, commas, and dedup") {
    CHECK(parse_tasks("both") == std::vector<Task>{Task::bhc, Task::di});
    CHECK(parse_tasks("di") == std::vector<Task>{Task::di});
    CHECK(parse_tasks("bhc,di") == std::vector<Task>{Task::bhc, Task::di});
    CHECK(parse_tasks("di, di") == std::vector<Task>{Task::di});
    CHECK(thrown_kind([] { parse_tasks("dx"); }) == ErrorKind::validation);
    CHECK(thrown_kind([] { parse_tasks(""); }) == ErrorKind::config);
}

TEST_CASE("resolved json echoes the effective settings") {
    auto cfg = load_config("", {{"seed", "7"}, {"out", "runs"}, {"tasks", "di"}});
    json j = json::parse(resolved_json(cfg));
    CHECK(j["seed"] == 7);
    CHECK(j["out"] == "runs");
    CHECK(j["data"] == "runs/data");
    CHECK(j["tasks"] == json::array({"di"}));
    CHECK(j["strategy"] == "retrieved");
    CHECK(j["generation"]["model_id"] == "llama3:8b-instruct-q8_0");
    CHECK(j["retrieval"]["embed_dim"] == 384);
    CHECK(j["wordcount"]["trees"] == 100);
    CHECK(j["retrieval"]["bhc_index"] == "runs/bhc_index.wsix");
}
