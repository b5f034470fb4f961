#include "ward/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <functional>

#include <nlohmann/json.hpp>

#include "ward/csv.hpp"
#include "ward/error.hpp"
#include "ward/text.hpp"
#include "ward/wordcount.hpp"

namespace ward::config {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class KeyType { string_t, uint_t, int_t, float_t, bool_t };

std::string_view type_name(KeyType type) {
    switch (type) {
        case KeyType::string_t: return "a string";
        case KeyType::uint_t: return "a non-negative integer";
        case KeyType::int_t: return "an integer";
        case KeyType::float_t: return "a number";
        case KeyType::bool_t: return "true or false";
    }
    return "a value";
}

struct KeySpec {
    std::string name;
    KeyType type;
    std::function<void(RunConfig&, const std::string&)> assign;
};

std::uint64_t parse_uint(const std::string& value) {
    if (!value.empty() && value.front() == '-') throw std::invalid_argument(value);
    std::size_t used = 0;
    unsigned long long parsed = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
}

std::int64_t parse_int(const std::string& value) {
    std::size_t used = 0;
    long long parsed = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
}

double parse_float(const std::string& value) {
    std::size_t used = 0;
    double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
}

bool parse_bool(const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw std::invalid_argument(value);
}

const std::vector<KeySpec>& registry() {
    static const std::vector<KeySpec> keys = [] {
        std::vector<KeySpec> k;
        k.push_back({"seed", KeyType::uint_t,
                     [](RunConfig& c, const std::string& v) { c.seed = parse_uint(v); }});
        k.push_back({"out", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.out_dir = v; }});
        k.push_back({"data", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.data_dir = v; }});
        k.push_back({"tasks", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.tasks = parse_tasks(v); }});
        k.push_back({"strategy", KeyType::string_t, [](RunConfig& c, const std::string& v) {
                         c.strategy = wordcount::parse_word_count_strategy(v);
                     }});

        k.push_back({"templates.bhc_structure", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.templates.bhc_structure = v; }});
        k.push_back({"templates.di_structure", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.templates.di_structure = v; }});
        k.push_back({"templates.bhc_prompt", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.templates.bhc_prompt = v; }});
        k.push_back({"templates.di_prompt", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.templates.di_prompt = v; }});

        k.push_back({"retrieval.provider", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) {
                         if (v != "hash" && v != "http")
                             raise(ErrorKind::config,
                                   "retrieval.provider must be hash or http, got '" + v + "'");
                         c.retrieval.provider = v;
                     }});
        k.push_back({"retrieval.embed_url", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.retrieval.embed_url = v; }});
        k.push_back({"retrieval.embed_model", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.retrieval.embed_model = v; }});
        k.push_back({"retrieval.embed_dim", KeyType::uint_t,
                     [](RunConfig& c, const std::string& v) {
                         c.retrieval.embed_dim = parse_uint(v);
                     }});
        k.push_back({"retrieval.concurrency", KeyType::uint_t,
                     [](RunConfig& c, const std::string& v) {
                         c.retrieval.concurrency = parse_uint(v);
                     }});
        k.push_back({"retrieval.exclude_self", KeyType::bool_t,
                     [](RunConfig& c, const std::string& v) {
                         c.retrieval.exclude_self = parse_bool(v);
                     }});
        k.push_back({"retrieval.bhc_index", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.retrieval.bhc_index = v; }});
        k.push_back({"retrieval.di_index", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.retrieval.di_index = v; }});

        k.push_back({"generation.base_url", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.generation.base_url = v; }});
        k.push_back({"generation.model_id", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.generation.model_id = v; }});
        k.push_back({"generation.temperature", KeyType::float_t,
                     [](RunConfig& c, const std::string& v) {
                         c.generation.temperature = parse_float(v);
                     }});
        k.push_back({"generation.seed", KeyType::int_t,
                     [](RunConfig& c, const std::string& v) {
                         c.generation.seed = parse_int(v);
                     }});
        k.push_back({"generation.timeout_s", KeyType::float_t,
                     [](RunConfig& c, const std::string& v) {
                         c.generation.timeout_s = parse_float(v);
                     }});
        k.push_back({"generation.max_retries", KeyType::int_t,
                     [](RunConfig& c, const std::string& v) {
                         c.generation.max_retries = static_cast<int>(parse_int(v));
                     }});
        k.push_back({"generation.backoff_s", KeyType::float_t,
                     [](RunConfig& c, const std::string& v) {
                         c.generation.backoff_s = parse_float(v);
                     }});
        k.push_back({"generation.repair", KeyType::bool_t,
                     [](RunConfig& c, const std::string& v) {
                         c.generation.repair = parse_bool(v);
                     }});
        k.push_back({"generation.concurrency", KeyType::uint_t,
                     [](RunConfig& c, const std::string& v) {
                         c.generation_concurrency = parse_uint(v);
                     }});

        k.push_back({"wordcount.trees", KeyType::uint_t,
                     [](RunConfig& c, const std::string& v) {
                         c.wordcount.trees = parse_uint(v);
                     }});
        k.push_back({"wordcount.depth", KeyType::uint_t,
                     [](RunConfig& c, const std::string& v) {
                         c.wordcount.depth = parse_uint(v);
                     }});
        k.push_back({"wordcount.bhc_model", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.wordcount.bhc_model = v; }});
        k.push_back({"wordcount.di_model", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.wordcount.di_model = v; }});

        k.push_back({"scorers.bertscore_url", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.scorers.bertscore_url = v; }});
        k.push_back({"scorers.align_url", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.scorers.align_url = v; }});
        k.push_back({"scorers.medcon_url", KeyType::string_t,
                     [](RunConfig& c, const std::string& v) { c.scorers.medcon_url = v; }});
        return k;
    }();
    return keys;
}

const KeySpec* find_key(const std::string& name) {
    for (const auto& spec : registry())
        if (spec.name == name) return &spec;
    return nullptr;
}

std::string unescape_quoted(std::string_view raw, std::size_t line_no) {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c != '\\') {
            out += c;
            continue;
        }
        if (++i == raw.size())
            raise(ErrorKind::config,
                  "config line " + std::to_string(line_no) + ": dangling escape");
        switch (raw[i]) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            default:
                raise(ErrorKind::config, "config line " + std::to_string(line_no) +
                                             ": unknown escape \\" + raw[i]);
        }
    }
    return out;
}

std::string parse_value(std::string_view raw, std::size_t line_no) {
    raw = trim_view(raw);
    if (!raw.empty() && raw.front() == '"') {
        // quoted string, scan for the closing quote honoring escapes
        for (std::size_t i = 1; i < raw.size(); ++i) {
            if (raw[i] == '\\') {
                ++i;
                continue;
            }
            if (raw[i] == '"') {
                if (!trim_view(raw.substr(i + 1)).empty())
                    raise(ErrorKind::config, "config line " + std::to_string(line_no) +
                                                 ": trailing content after closing quote");
                return unescape_quoted(raw.substr(1, i - 1), line_no);
            }
        }
        raise(ErrorKind::config,
              "config line " + std::to_string(line_no) + ": unterminated string");
    }
    return std::string(raw);
}

}  // namespace

RunConfig default_config() {
    RunConfig config;
    config.generation.base_url = "http://127.0.0.1:11434";
    config.generation.model_id = "llama3:8b-instruct-q8_0";
    return config;
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& spec : registry()) out.push_back(spec.name);
        return out;
    }();
    return names;
}

std::string env_var_for(const std::string& key) {
    std::string name = "WARD_";
    for (char c : key)
        name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return name;
}

std::vector<std::pair<std::string, std::string>> parse_config_file(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        ++line_no;
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        // strip comments outside quotes
        bool quoted = false;
        std::size_t cut = line.size();
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (c == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
            if (c == '#' && !quoted) {
                cut = i;
                break;
            }
        }
        std::string_view body = trim_view(line.substr(0, cut));
        if (body.empty()) continue;

        std::size_t eq = body.find('=');
        if (eq == std::string_view::npos)
            raise(ErrorKind::config,
                  "config line " + std::to_string(line_no) + ": expected key = value");
        std::string key(trim_view(body.substr(0, eq)));
        if (key.empty())
            raise(ErrorKind::config, "config line " + std::to_string(line_no) + ": empty key");
        entries.emplace_back(key, parse_value(body.substr(eq + 1), line_no));
    }
    return entries;
}

void apply_kv(RunConfig& config, const std::string& key, const std::string& value,
              const std::string& origin) {
    const KeySpec* spec = find_key(key);
    if (!spec) raise(ErrorKind::config, "unknown config key '" + key + "' (" + origin + ")");
    try {
        spec->assign(config, value);
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        raise(ErrorKind::config, "config key '" + key + "' expects " +
                                     std::string(type_name(spec->type)) + ", got '" + value +
                                     "' (" + origin + ")");
    }
}

RunConfig load_config(const std::string& file_path,
                      const std::vector<std::pair<std::string, std::string>>& flag_overrides) {
    RunConfig config = default_config();
    if (!file_path.empty()) {
        for (const auto& [key, value] : parse_config_file(read_file(file_path)))
            apply_kv(config, key, value, file_path);
    }
    for (const auto& key : known_keys()) {
        const char* value = std::getenv(env_var_for(key).c_str());
        if (value) apply_kv(config, key, value, "environment " + env_var_for(key));
    }
    for (const auto& [key, value] : flag_overrides) apply_kv(config, key, value, "flag");
    return config;
}

std::string data_dir(const RunConfig& config) {
    if (!config.data_dir.empty()) return config.data_dir;
    return (fs::path(config.out_dir) / "data").string();
}

std::string index_path(const RunConfig& config, Task task) {
    const std::string& configured =
        task == Task::bhc ? config.retrieval.bhc_index : config.retrieval.di_index;
    if (!configured.empty()) return configured;
    return (fs::path(config.out_dir) / (std::string(task_name(task)) + "_index.wsix")).string();
}

std::string wc_model_path(const RunConfig& config, Task task) {
    const std::string& configured =
        task == Task::bhc ? config.wordcount.bhc_model : config.wordcount.di_model;
    if (!configured.empty()) return configured;
    return (fs::path(config.out_dir) / ("wc_" + std::string(task_name(task)) + ".json")).string();
}

std::vector<Task> parse_tasks(std::string_view text) {
    std::vector<Task> tasks;
    if (trim_view(text) == "both") return {Task::bhc, Task::di};
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string_view part = trim_view(
            text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                             : comma - pos));
        if (!part.empty()) {
            Task task = parse_task(part);
            if (std::find(tasks.begin(), tasks.end(), task) == tasks.end()) tasks.push_back(task);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (tasks.empty()) raise(ErrorKind::config, "tasks selects nothing: '" + std::string(text) + "'");
    return tasks;
}

std::string resolved_json(const RunConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["out"] = config.out_dir;
    j["data"] = data_dir(config);
    std::vector<std::string> task_names;
    for (Task task : config.tasks) task_names.emplace_back(task_name(task));
    j["tasks"] = task_names;
    j["strategy"] = std::string(retrieval::word_count_source_name(config.strategy));
    j["templates"] = {{"bhc_structure", config.templates.bhc_structure},
                      {"di_structure", config.templates.di_structure},
                      {"bhc_prompt", config.templates.bhc_prompt},
                      {"di_prompt", config.templates.di_prompt}};
    j["retrieval"] = {{"provider", config.retrieval.provider},
                      {"embed_url", config.retrieval.embed_url},
                      {"embed_model", config.retrieval.embed_model},
                      {"embed_dim", config.retrieval.embed_dim},
                      {"concurrency", config.retrieval.concurrency},
                      {"exclude_self", config.retrieval.exclude_self},
                      {"bhc_index", index_path(config, Task::bhc)},
                      {"di_index", index_path(config, Task::di)}};
    j["generation"] = {{"base_url", config.generation.base_url},
                       {"model_id", config.generation.model_id},
                       {"temperature", config.generation.temperature},
                       {"timeout_s", config.generation.timeout_s},
                       {"max_retries", config.generation.max_retries},
                       {"backoff_s", config.generation.backoff_s},
                       {"repair", config.generation.repair},
                       {"concurrency", config.generation_concurrency}};
    if (config.generation.seed) j["generation"]["seed"] = *config.generation.seed;
    j["wordcount"] = {{"trees", config.wordcount.trees},
                      {"depth", config.wordcount.depth},
                      {"bhc_model", wc_model_path(config, Task::bhc)},
                      {"di_model", wc_model_path(config, Task::di)}};
    j["scorers"] = {{"bertscore_url", config.scorers.bertscore_url},
                    {"align_url", config.scorers.align_url},
                    {"medcon_url", config.scorers.medcon_url}};
    return j.dump();
}

}  // namespace ward::config
