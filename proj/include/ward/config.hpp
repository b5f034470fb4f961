#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ward/generation.hpp"
#include "ward/promptkit.hpp"
#include "ward/retrieval.hpp"
#include "ward/task.hpp"

namespace ward::config {

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string data_dir;  // defaults to <out>/data when empty
    std::vector<Task> tasks{Task::bhc, Task::di};
    retrieval::WordCountSource strategy = retrieval::WordCountSource::retrieved;

    promptkit::TemplatePaths templates;  // empty slots fall back to embedded defaults

    struct Retrieval {
        std::string provider = "hash";  // hash | http
        std::string embed_url;
        std::string embed_model = "nomic-embed-text";
        std::uint64_t embed_dim = 384;
        std::uint64_t concurrency = 4;
        bool exclude_self = true;
        std::string bhc_index;  // defaults under <out>
        std::string di_index;
    } retrieval;

    generation::GenerationConfig generation;
    std::uint64_t generation_concurrency = 2;

    struct Wordcount {
        std::uint64_t trees = 100;
        std::uint64_t depth = 12;
        std::string bhc_model;  // defaults under <out>
        std::string di_model;
    } wordcount;

    struct Scorers {
        std::string bertscore_url;
        std::string align_url;
        std::string medcon_url;
    } scorers;
};

RunConfig default_config();

// Flat dotted keys in registry order, e.g. "generation.model_id".
const std::vector<std::string>& known_keys();

// WARD_ env variable that overrides a key: dots to underscores, uppercased.
std::string env_var_for(const std::string& key);

// key = value lines, # comments, double-quoted strings with \" \\ \n \t.
std::vector<std::pair<std::string, std::string>> parse_config_file(std::string_view text);

// Strictly typed assignment; origin names the layer for error messages.
void apply_kv(RunConfig& config, const std::string& key, const std::string& value,
              const std::string& origin);

// Layering: defaults, then file (may be empty for none), then WARD_ env vars,
// then explicit flag overrides.
RunConfig load_config(const std::string& file_path,
                      const std::vector<std::pair<std::string, std::string>>& flag_overrides = {});

// Resolved data dir / index / model paths with their <out> fallbacks applied.
std::string data_dir(const RunConfig& config);
std::string index_path(const RunConfig& config, Task task);
std::string wc_model_path(const RunConfig& config, Task task);

std::vector<Task> parse_tasks(std::string_view text);

// Full resolved config as one JSON object, for the run log.
std::string resolved_json(const RunConfig& config);

}  // namespace ward::config
