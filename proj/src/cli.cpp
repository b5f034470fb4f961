#include "ward/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ward/config.hpp"
#include "ward/corpus.hpp"
#include "ward/csv.hpp"
#include "ward/error.hpp"
#include "ward/evaluation.hpp"
#include "ward/generation.hpp"
#include "ward/promptkit.hpp"
#include "ward/retrieval.hpp"
#include "ward/rng.hpp"
#include "ward/segmenter.hpp"
#include "ward/stubserver.hpp"
#include "ward/wordcount.hpp"

namespace ward::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct DataBundle {
    corpus::Corpus corpus;
    corpus::AuxTables aux;
};

DataBundle load_data(const config::RunConfig& cfg) {
    fs::path dir = config::data_dir(cfg);
    fs::path discharge = dir / "discharge.csv";
    if (!fs::exists(discharge))
        raise(ErrorKind::io, "no discharge.csv under " + dir.string() +
                                 " (run synth first or point data at a fixture)");
    std::map<std::string, std::string> aux_paths;
    for (const char* table : {"patients", "admissions", "diagnoses", "transfers", "radiology"}) {
        fs::path path = dir / (std::string(table) + ".csv");
        if (fs::exists(path)) aux_paths[table] = path.string();
    }
    DataBundle bundle;
    bundle.aux = corpus::load_aux_tables(aux_paths);
    bundle.corpus = corpus::load_corpus(discharge.string(), &bundle.aux);
    return bundle;
}

std::vector<segmenter::SectionedLetter> segment_plain(const corpus::Corpus& c) {
    return corpus::segment_corpus(c, segmenter::default_section_specs());
}

std::vector<segmenter::SectionedLetter> segment_backfilled(const corpus::Corpus& c) {
    auto letters = segment_plain(c);
    for (std::size_t i = 0; i < letters.size(); ++i)
        letters[i] = corpus::backfill_imaging(std::move(letters[i]), c.records[i].radiology_notes);
    return letters;
}

std::unique_ptr<retrieval::EmbeddingProvider> make_provider(const config::RunConfig& cfg) {
    if (cfg.retrieval.provider == "http") {
        if (cfg.retrieval.embed_url.empty())
            raise(ErrorKind::config, "retrieval.embed_url is required for the http provider");
        retrieval::HttpEmbeddingConfig ec;
        ec.base_url = cfg.retrieval.embed_url;
        ec.model = cfg.retrieval.embed_model;
        return std::make_unique<retrieval::HttpEmbeddingProvider>(ec);
    }
    return std::make_unique<retrieval::HashEmbeddingProvider>(
        static_cast<std::size_t>(cfg.retrieval.embed_dim));
}

retrieval::RetrievalIndex load_index_for(const config::RunConfig& cfg, Task task) {
    std::string path = config::index_path(cfg, task);
    if (!fs::exists(path))
        raise(ErrorKind::io, "no index at " + path + " (run build-index first)");
    return retrieval::load_index(path, task);
}

std::vector<std::size_t> gold_word_counts(const std::vector<segmenter::SectionedLetter>& letters,
                                          Task task, std::vector<std::size_t>* kept_indices) {
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < letters.size(); ++i) {
        auto targets = segmenter::extract_targets(letters[i]);
        const auto& gold = task == Task::bhc ? targets.bhc : targets.di;
        if (!gold) continue;
        counts.push_back(segmenter::word_count(*gold));
        if (kept_indices) kept_indices->push_back(i);
    }
    return counts;
}

std::size_t class_threshold(Task task) { return task == Task::bhc ? 450 : 280; }

std::vector<evaluation::ExternalScorer> configured_scorers(const config::RunConfig& cfg) {
    std::vector<evaluation::ExternalScorer> scorers;
    auto add = [&](const char* name, const std::string& url) {
        if (url.empty()) return;
        evaluation::ExternalScorer scorer;
        scorer.name = name;
        scorer.url = url;
        scorers.push_back(std::move(scorer));
    };
    add("bertscore", cfg.scorers.bertscore_url);
    add("align", cfg.scorers.align_url);
    add("medcon", cfg.scorers.medcon_url);
    return scorers;
}

// hadm_id -> text for one task, from predictions csv or gold jsonl. Returns
// an empty map when the file simply lacks that task's column.
std::map<std::string, std::string> read_predictions(const std::string& path, Task task) {
    std::map<std::string, std::string> out;
    if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
        std::string content = read_file(path);
        std::size_t pos = 0;
        while (pos < content.size()) {
            std::size_t eol = content.find('\n', pos);
            if (eol == std::string::npos) eol = content.size();
            std::string line = content.substr(pos, eol - pos);
            pos = eol + 1;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("hadm_id"))
                raise(ErrorKind::schema, "bad jsonl line in " + path);
            const char* short_key = task == Task::bhc ? "bhc" : "di";
            std::string long_key(task_section_name(task));
            if (j.contains(short_key))
                out[j["hadm_id"].get<std::string>()] = j[short_key].get<std::string>();
            else if (j.contains(long_key))
                out[j["hadm_id"].get<std::string>()] = j[long_key].get<std::string>();
        }
        return out;
    }
    CsvTable table = read_csv_file(path);
    std::size_t hadm_col = table.require_column("hadm_id");
    auto text_col = table.column_index(std::string(task_section_name(task)));
    if (!text_col) text_col = table.column_index(std::string(task_name(task)));
    if (!text_col) return out;
    for (const auto& row : table.rows) out[row[hadm_col]] = row[*text_col];
    return out;
}

void write_run_log(const config::RunConfig& cfg) {
    atomic_write_file(fs::path(cfg.out_dir) / "run_config.json", config::resolved_json(cfg) + "\n");
}

json cmd_synth(const config::RunConfig& cfg, std::size_t n) {
    auto synth = corpus::generate_synthetic_corpus(cfg.seed, n);
    std::string dir = config::data_dir(cfg);
    fs::create_directories(dir);
    corpus::write_synthetic_fixture(synth, dir);
    return json{{"command", "synth"},
                {"records", synth.corpus.records.size()},
                {"seed", cfg.seed},
                {"dir", dir}};
}

json cmd_segment(const config::RunConfig& cfg) {
    auto data = load_data(cfg);
    auto letters = segment_plain(data.corpus);
    std::size_t total_sections = 0, reconstruct_ok = 0;
    std::string body;
    for (std::size_t i = 0; i < letters.size(); ++i) {
        total_sections += letters[i].sections.size();
        bool ok = letters[i].reconstruct() == data.corpus.records[i].text;
        reconstruct_ok += ok ? 1 : 0;
        json sections = json::array();
        for (const auto& [name, text] : letters[i].sections)
            sections.push_back(json{{"name", name}, {"words", segmenter::word_count(text)}});
        json line{{"hadm_id", data.corpus.records[i].hadm_id},
                  {"sections", std::move(sections)},
                  {"reconstructed", ok}};
        body += line.dump();
        body += '\n';
    }
    fs::path out_path = fs::path(cfg.out_dir) / "sections.jsonl";
    atomic_write_file(out_path, body);
    return json{{"command", "segment"},
                {"records", letters.size()},
                {"sections_total", total_sections},
                {"reconstruct_ok", reconstruct_ok},
                {"out", out_path.string()}};
}

json cmd_build_index(const config::RunConfig& cfg) {
    auto data = load_data(cfg);
    auto letters = segment_backfilled(data.corpus);
    auto provider = make_provider(cfg);
    json indexes = json::array();
    for (Task task : cfg.tasks) {
        retrieval::BuildStats stats;
        auto index = retrieval::build_index(data.corpus, letters,
                                            retrieval::TaskContextSpec::defaults(task), *provider,
                                            static_cast<std::size_t>(cfg.retrieval.concurrency),
                                            &stats);
        std::string path = config::index_path(cfg, task);
        retrieval::save_index(index, path);
        indexes.push_back(json{{"task", std::string(task_name(task))},
                               {"path", path},
                               {"entries", stats.indexed},
                               {"skipped_missing_target", stats.skipped_missing_target},
                               {"dim", index.dimension}});
    }
    return json{{"command", "build-index"}, {"indexes", std::move(indexes)}};
}

json cmd_train_wc(const config::RunConfig& cfg) {
    auto data = load_data(cfg);
    auto letters = segment_plain(data.corpus);
    json models = json::array();
    for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
        Task task = cfg.tasks[t];
        std::vector<std::size_t> kept;
        auto counts = gold_word_counts(letters, task, &kept);
        if (counts.empty())
            raise(ErrorKind::validation,
                  "no records carry the gold " + std::string(task_section_name(task)));
        std::vector<wordcount::FeatureVector> features;
        features.reserve(kept.size());
        for (std::size_t i : kept)
            features.push_back(wordcount::extract_features(data.corpus.records[i], letters[i]));

        // seeded 80/20 split, training on the larger share
        std::vector<std::size_t> order(kept.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(Rng::derive_seed(cfg.seed, 1000 + t));
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[rng.bounded(i + 1)]);
        std::size_t train_n = std::max<std::size_t>(1, order.size() * 8 / 10);
        if (train_n == order.size() && order.size() > 1) --train_n;
        std::vector<wordcount::FeatureVector> train_x, eval_x;
        std::vector<std::size_t> train_y, eval_y;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i < train_n) {
                train_x.push_back(features[order[i]]);
                train_y.push_back(counts[order[i]]);
            } else {
                eval_x.push_back(features[order[i]]);
                eval_y.push_back(counts[order[i]]);
            }
        }
        if (eval_x.empty()) {
            eval_x = train_x;
            eval_y = train_y;
        }

        wordcount::ForestConfig forest;
        forest.n_trees = static_cast<std::size_t>(cfg.wordcount.trees);
        forest.max_depth = static_cast<std::size_t>(cfg.wordcount.depth);
        forest.seed = Rng::derive_seed(cfg.seed, 2000 + t);
        auto model =
            wordcount::train_forest(train_x, train_y, class_threshold(task), forest);
        auto report = wordcount::evaluate_classifier(model, eval_x, eval_y, class_threshold(task));
        std::string path = config::wc_model_path(cfg, task);
        wordcount::save_model(model, path);
        std::cout << task_section_name(task) << " classifier (threshold "
                  << class_threshold(task) << " words, " << eval_x.size() << " held out)\n"
                  << wordcount::format_report(report);
        models.push_back(json{{"task", std::string(task_name(task))},
                              {"path", path},
                              {"train_records", train_x.size()},
                              {"eval_records", eval_x.size()},
                              {"accuracy", report.accuracy},
                              {"above_f1", report.above.f1},
                              {"below_f1", report.below.f1}});
    }
    return json{{"command", "train-wc-classifier"}, {"models", std::move(models)}};
}

json cmd_predict_wc(const config::RunConfig& cfg) {
    using WS = retrieval::WordCountSource;
    auto data = load_data(cfg);
    auto letters = segment_backfilled(data.corpus);
    auto provider = make_provider(cfg);
    json outputs = json::array();
    for (Task task : cfg.tasks) {
        std::optional<retrieval::RetrievalIndex> index;
        std::optional<wordcount::ForestModel> model;
        std::optional<wordcount::LogNormalFit> fit;
        auto spec = retrieval::TaskContextSpec::defaults(task);
        if (cfg.strategy == WS::retrieved) index = load_index_for(cfg, task);
        if (cfg.strategy == WS::classifier)
            model = wordcount::load_model(config::wc_model_path(cfg, task));
        if (cfg.strategy == WS::distribution) {
            auto counts = gold_word_counts(letters, task, nullptr);
            std::vector<double> samples(counts.begin(), counts.end());
            fit = wordcount::fit_lognormal(samples);
        }

        std::vector<std::size_t> order(data.corpus.records.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data.corpus.records[a].hadm_id < data.corpus.records[b].hadm_id;
        });
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i : order) {
            wordcount::PredictInputs inputs;
            inputs.task = task;
            inputs.index = index ? &*index : nullptr;
            inputs.letter = &letters[i];
            inputs.admission = &data.corpus.records[i].admission;
            inputs.hadm_id = data.corpus.records[i].hadm_id;
            inputs.context_spec = &spec;
            inputs.provider = provider.get();
            inputs.exclude_self = cfg.retrieval.exclude_self;
            wordcount::FeatureVector features;
            if (cfg.strategy == WS::classifier) {
                features = wordcount::extract_features(data.corpus.records[i], letters[i]);
                inputs.model = &*model;
                inputs.features = &features;
            }
            if (cfg.strategy == WS::distribution) inputs.fit = &*fit;
            auto target = wordcount::predict_word_count(cfg.strategy, inputs);
            rows.push_back({data.corpus.records[i].hadm_id, target.words_text});
        }
        fs::path out_path =
            fs::path(cfg.out_dir) / ("wordcounts_" + std::string(task_name(task)) + ".csv");
        atomic_write_file(out_path, format_csv({"hadm_id", "words"}, rows));
        outputs.push_back(json{{"task", std::string(task_name(task))},
                               {"records", rows.size()},
                               {"out", out_path.string()}});
    }
    return json{{"command", "predict-wc"},
                {"strategy", std::string(retrieval::word_count_source_name(cfg.strategy))},
                {"outputs", std::move(outputs)}};
}

struct PipelineBundle {
    promptkit::TemplateSet templates;
    std::unique_ptr<retrieval::EmbeddingProvider> provider;
    std::optional<retrieval::RetrievalIndex> bhc_index, di_index;
    std::optional<wordcount::ForestModel> bhc_model, di_model;
    std::optional<wordcount::LogNormalFit> bhc_fit, di_fit;
    generation::PipelineArtifacts artifacts;
};

// Loads everything the configured strategy needs and wires the pointers.
PipelineBundle make_pipeline_bundle(const config::RunConfig& cfg,
                                    const std::vector<segmenter::SectionedLetter>& letters) {
    using WS = retrieval::WordCountSource;
    PipelineBundle bundle;
    bundle.templates = promptkit::load_templates(cfg.templates);
    bundle.provider = make_provider(cfg);
    if (cfg.strategy == WS::retrieved) {
        bundle.bhc_index = load_index_for(cfg, Task::bhc);
        bundle.di_index = load_index_for(cfg, Task::di);
    }
    if (cfg.strategy == WS::classifier) {
        bundle.bhc_model = wordcount::load_model(config::wc_model_path(cfg, Task::bhc));
        bundle.di_model = wordcount::load_model(config::wc_model_path(cfg, Task::di));
    }
    if (cfg.strategy == WS::distribution) {
        for (Task task : {Task::bhc, Task::di}) {
            auto counts = gold_word_counts(letters, task, nullptr);
            std::vector<double> samples(counts.begin(), counts.end());
            auto& slot = task == Task::bhc ? bundle.bhc_fit : bundle.di_fit;
            slot = wordcount::fit_lognormal(samples);
        }
    }
    bundle.artifacts.templates = &bundle.templates;
    bundle.artifacts.provider = bundle.provider.get();
    if (bundle.bhc_index) bundle.artifacts.bhc_index = &*bundle.bhc_index;
    if (bundle.di_index) bundle.artifacts.di_index = &*bundle.di_index;
    if (bundle.bhc_model) bundle.artifacts.bhc_model = &*bundle.bhc_model;
    if (bundle.di_model) bundle.artifacts.di_model = &*bundle.di_model;
    if (bundle.bhc_fit) bundle.artifacts.bhc_fit = &*bundle.bhc_fit;
    if (bundle.di_fit) bundle.artifacts.di_fit = &*bundle.di_fit;
    return bundle;
}

generation::PipelineStrategy make_strategy(const config::RunConfig& cfg) {
    generation::PipelineStrategy strategy;
    strategy.word_source = cfg.strategy;
    strategy.exclude_self = cfg.retrieval.exclude_self;
    return strategy;
}

json cmd_generate(const config::RunConfig& cfg) {
    auto data = load_data(cfg);
    auto letters = segment_backfilled(data.corpus);
    auto bundle = make_pipeline_bundle(cfg, letters);
    auto outputs = generation::run_corpus(data.corpus, letters, bundle.artifacts,
                                          make_strategy(cfg), cfg.generation,
                                          static_cast<std::size_t>(cfg.generation_concurrency));
    fs::path out_dir(cfg.out_dir);
    generation::write_outputs_jsonl(outputs, (out_dir / "outputs.jsonl").string());
    generation::write_predictions_csv(outputs, (out_dir / "predictions.csv").string());
    generation::write_contexts_jsonl(outputs, (out_dir / "contexts.jsonl").string());
    std::size_t fallbacks = 0;
    for (const auto& out : outputs)
        fallbacks += (out.pipeline.bhc.word_target_fallback ? 1 : 0) +
                     (out.pipeline.di.word_target_fallback ? 1 : 0);
    return json{{"command", "generate"},
                {"records", outputs.size()},
                {"word_target_fallbacks", fallbacks},
                {"outputs", (out_dir / "outputs.jsonl").string()},
                {"predictions", (out_dir / "predictions.csv").string()},
                {"contexts", (out_dir / "contexts.jsonl").string()}};
}

json cmd_baseline(const config::RunConfig& cfg, const std::string& kind_name,
                  const std::string& fixed_words) {
    auto kind = evaluation::parse_baseline_kind(kind_name);
    auto data = load_data(cfg);
    auto letters = segment_backfilled(data.corpus);

    evaluation::BaselineInputs inputs;
    inputs.concurrency = static_cast<std::size_t>(cfg.generation_concurrency);
    if (!fixed_words.empty()) inputs.fixed_words = fixed_words;

    std::optional<PipelineBundle> bundle;
    std::unique_ptr<retrieval::EmbeddingProvider> provider;
    std::optional<retrieval::RetrievalIndex> task_index;
    if (kind == evaluation::BaselineKind::fixed_word ||
        kind == evaluation::BaselineKind::pipeline) {
        config::RunConfig effective = cfg;
        if (kind == evaluation::BaselineKind::fixed_word)
            effective.strategy = retrieval::WordCountSource::fixed;
        else
            effective.strategy = retrieval::WordCountSource::retrieved;
        bundle = make_pipeline_bundle(effective, letters);
        inputs.artifacts = &bundle->artifacts;
        inputs.config = &cfg.generation;
    }

    json outputs = json::array();
    for (Task task : cfg.tasks) {
        if (kind == evaluation::BaselineKind::retrieved_target) {
            provider = make_provider(cfg);
            task_index = load_index_for(cfg, task);
            inputs.index = &*task_index;
            inputs.provider = provider.get();
        }
        auto predictions =
            evaluation::run_baseline(kind, data.corpus, letters, task, cfg.seed, inputs);
        std::vector<std::vector<std::string>> rows;
        for (const auto& [hadm, text] : predictions) rows.push_back({hadm, text});
        fs::path out_path = fs::path(cfg.out_dir) / ("baseline_" + kind_name + "_" +
                                                     std::string(task_name(task)) + ".csv");
        atomic_write_file(out_path,
                          format_csv({"hadm_id", std::string(task_section_name(task))}, rows));
        outputs.push_back(json{{"task", std::string(task_name(task))},
                               {"records", predictions.size()},
                               {"out", out_path.string()}});
    }
    return json{{"command", "baseline"}, {"kind", kind_name}, {"outputs", std::move(outputs)}};
}

json cmd_evaluate(const config::RunConfig& cfg, const std::string& pred_path,
                  const std::string& gold_path) {
    auto scorers = configured_scorers(cfg);
    std::vector<std::pair<std::string, evaluation::MetricReport>> table_rows;
    std::vector<std::string> warnings;
    json tasks = json::array();
    for (Task task : cfg.tasks) {
        auto predictions = read_predictions(pred_path, task);
        auto references = read_predictions(gold_path, task);
        if (predictions.empty() || references.empty()) continue;
        auto report = evaluation::score_corpus(predictions, references, scorers, &warnings);
        fs::path report_path =
            fs::path(cfg.out_dir) / ("report_" + std::string(task_name(task)) + ".json");
        atomic_write_file(report_path, evaluation::report_to_json(report) + "\n");
        table_rows.emplace_back(std::string(task_name(task)), report);
        tasks.push_back(json{{"task", std::string(task_name(task))},
                             {"records", std::min(predictions.size(), references.size())},
                             {"overall", report.overall},
                             {"report", report_path.string()}});
    }
    if (table_rows.empty())
        raise(ErrorKind::schema, "no task column found in both " + pred_path + " and " + gold_path);
    std::cout << evaluation::format_metric_table(table_rows);
    for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
    return json{{"command", "evaluate"}, {"tasks", std::move(tasks)},
                {"warnings", warnings.size()}};
}

json cmd_rank(const config::RunConfig& cfg) {
    auto data = load_data(cfg);
    auto letters = segment_plain(data.corpus);
    json tables = json::array();
    for (Task task : cfg.tasks) {
        auto table = evaluation::rank_sections(data.corpus, letters, task);
        fs::path out_path =
            fs::path(cfg.out_dir) / ("ranking_" + std::string(task_name(task)) + ".json");
        atomic_write_file(out_path, evaluation::ranking_to_json(table) + "\n");
        std::cout << "target " << task_section_name(task) << " (" << table.records_used
                  << " records)\n"
                  << evaluation::format_ranking_table(table);
        tables.push_back(json{{"task", std::string(task_name(task))},
                              {"records_used", table.records_used},
                              {"top_section", table.rows.front().section_name},
                              {"out", out_path.string()}});
    }
    return json{{"command", "rank"}, {"tables", std::move(tables)}};
}

int cmd_stub_server(const config::RunConfig& cfg, double hold_s) {
    stubserver::StubConfig stub_cfg;
    stub_cfg.embed_dim = static_cast<std::size_t>(cfg.retrieval.embed_dim);
    stubserver::StubServer server(stub_cfg);
    std::cout << json{{"command", "stub-server"}, {"base_url", server.base_url()}}.dump()
              << std::endl;
    if (hold_s > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(hold_s));
        return 0;
    }
    while (true) std::this_thread::sleep_for(std::chrono::seconds(3600));
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"discharge letter pipeline: segment, retrieve, prompt, generate, evaluate"};
    app.require_subcommand(1);
    app.fallthrough();  // lets global flags appear after the subcommand name
    argv = app.ensure_utf8(argv);

    std::string config_path;
    app.add_option("--config", config_path, "layered config file (flags > env > file)");
    // global passthrough flags, applied on top of env and file settings
    std::string flag_seed, flag_out, flag_data, flag_task, flag_strategy, flag_base_url,
        flag_model;
    auto* opt_seed = app.add_option("--seed", flag_seed, "master random seed");
    auto* opt_out = app.add_option("--out", flag_out, "output directory");
    auto* opt_data = app.add_option("--data", flag_data, "fixture/data directory");
    auto* opt_task = app.add_option("--task", flag_task, "bhc, di or both");
    auto* opt_strategy =
        app.add_option("--strategy", flag_strategy, "fixed|retrieved|classifier|distribution");
    auto* opt_base_url = app.add_option("--base-url", flag_base_url, "model server base url");
    auto* opt_model = app.add_option("--model", flag_model, "generation model id");

    auto* synth = app.add_subcommand("synth", "write a synthetic discharge fixture");
    std::size_t synth_n = 50;
    synth->add_option("--n", synth_n, "number of records")->check(CLI::PositiveNumber);

    auto* segment = app.add_subcommand("segment", "segment letters into canonical sections");
    auto* build_index = app.add_subcommand("build-index", "embed task contexts into an index");
    auto* train_wc =
        app.add_subcommand("train-wc-classifier", "train the word-count band classifier");
    std::string flag_trees, flag_depth;
    auto* opt_trees = train_wc->add_option("--trees", flag_trees, "forest size");
    auto* opt_depth = train_wc->add_option("--depth", flag_depth, "tree depth cap");
    auto* predict_wc = app.add_subcommand("predict-wc", "predict word-count targets per record");
    auto* generate = app.add_subcommand("generate", "run the two-stage generation pipeline");
    auto* baseline = app.add_subcommand("baseline", "run a reference system");
    std::string baseline_kind, baseline_fixed_words;
    baseline->add_option("--kind", baseline_kind,
                         "random_shuffle|retrieved_target|fixed_word|pipeline")
        ->required();
    baseline->add_option("--fixed-words", baseline_fixed_words,
                         "word target override for fixed_word");
    auto* evaluate = app.add_subcommand("evaluate", "score predictions against references");
    std::string pred_path, gold_path;
    evaluate->add_option("--pred", pred_path, "predictions csv/jsonl")->required();
    evaluate->add_option("--gold", gold_path, "reference csv/jsonl")->required();
    auto* rank = app.add_subcommand("rank", "rank sections by similarity to the gold target");
    auto* stub = app.add_subcommand("stub-server", "serve canned model replies for offline runs");
    double hold_s = 0.0;
    stub->add_option("--hold-s", hold_s, "exit after this many seconds (0 = run forever)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        std::vector<std::pair<std::string, std::string>> overrides;
        auto push = [&](const CLI::Option* opt, const char* key, const std::string& value) {
            if (opt->count()) overrides.emplace_back(key, value);
        };
        push(opt_seed, "seed", flag_seed);
        push(opt_out, "out", flag_out);
        push(opt_data, "data", flag_data);
        push(opt_task, "tasks", flag_task);
        push(opt_strategy, "strategy", flag_strategy);
        push(opt_base_url, "generation.base_url", flag_base_url);
        push(opt_model, "generation.model_id", flag_model);
        push(opt_trees, "wordcount.trees", flag_trees);
        push(opt_depth, "wordcount.depth", flag_depth);
        config::RunConfig cfg = config::load_config(config_path, overrides);

        fs::create_directories(cfg.out_dir);
        write_run_log(cfg);

        json summary;
        if (*synth) summary = cmd_synth(cfg, synth_n);
        else if (*segment) summary = cmd_segment(cfg);
        else if (*build_index) summary = cmd_build_index(cfg);
        else if (*train_wc) summary = cmd_train_wc(cfg);
        else if (*predict_wc) summary = cmd_predict_wc(cfg);
        else if (*generate) summary = cmd_generate(cfg);
        else if (*baseline) summary = cmd_baseline(cfg, baseline_kind, baseline_fixed_words);
        else if (*evaluate) summary = cmd_evaluate(cfg, pred_path, gold_path);
        else if (*rank) summary = cmd_rank(cfg);
        else if (*stub) return cmd_stub_server(cfg, hold_s);
        std::cout << summary.dump() << std::endl;
        return 0;
    } catch (const Error& e) {
        std::cerr << json{{"error", error_kind_name(e.kind())}, {"message", e.what()}}.dump()
                  << std::endl;
        return e.kind() == ErrorKind::transport || e.kind() == ErrorKind::server ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << std::endl;
        return 1;
    }
}

}  // namespace ward::cli
