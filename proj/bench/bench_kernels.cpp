// Parallel kernels against their serial references: index search, corpus
// scoring, section ranking, and forest training. Run with --benchmark_filter
// to isolate one kernel.

#include <benchmark/benchmark.h>

#include <map>
#include <string>
#include <vector>

#include "ward/corpus.hpp"
#include "ward/evaluation.hpp"
#include "ward/retrieval.hpp"
#include "ward/rng.hpp"
#include "ward/segmenter.hpp"
#include "ward/wordcount.hpp"

namespace {

using namespace ward;

retrieval::RetrievalIndex make_index(std::size_t n, std::size_t dim) {
    Rng rng(91);
    retrieval::RetrievalIndex index;
    index.dimension = static_cast<std::uint32_t>(dim);
    index.entries.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "h%06zu", i);
        index.entries[i].hadm_id = id;
        index.entries[i].vector.resize(dim);
        for (auto& v : index.entries[i].vector)
            v = static_cast<float>(2.0 * rng.uniform() - 1.0);
    }
    return index;
}

std::vector<float> make_query(std::size_t dim) {
    Rng rng(17);
    std::vector<float> query(dim);
    for (auto& v : query) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
    return query;
}

void bench_search_parallel(benchmark::State& state) {
    auto index = make_index(static_cast<std::size_t>(state.range(0)), 384);
    auto query = make_query(384);
    for (auto _ : state)
        benchmark::DoNotOptimize(retrieval::search(index, query, 5));
}

void bench_search_serial(benchmark::State& state) {
    auto index = make_index(static_cast<std::size_t>(state.range(0)), 384);
    auto query = make_query(384);
    for (auto _ : state)
        benchmark::DoNotOptimize(retrieval::search_serial(index, query, 5));
}

std::pair<std::map<std::string, std::string>, std::map<std::string, std::string>>
make_scoring_corpus(std::size_t n) {
    const char* vocab[] = {"patient", "stable", "discharged", "medication", "followup",
                           "improved", "course",  "admitted",   "therapy",    "recovered"};
    Rng rng(23);
    std::map<std::string, std::string> predictions, references;
    for (std::size_t i = 0; i < n; ++i) {
        std::string key = "h" + std::to_string(i);
        std::string pred, ref;
        for (int w = 0; w < 60; ++w) {
            pred += vocab[rng.bounded(10)];
            pred += ' ';
            ref += vocab[rng.bounded(10)];
            ref += ' ';
        }
        predictions[key] = pred;
        references[key] = ref;
    }
    return {predictions, references};
}

void bench_score_corpus_parallel(benchmark::State& state) {
    auto [predictions, references] = make_scoring_corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluation::score_corpus(predictions, references));
}

void bench_score_corpus_serial(benchmark::State& state) {
    auto [predictions, references] = make_scoring_corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluation::score_corpus_serial(predictions, references));
}

struct RankingFixture {
    corpus::Corpus corpus;
    std::vector<segmenter::SectionedLetter> letters;
};

RankingFixture make_ranking_fixture(std::size_t n) {
    RankingFixture fixture;
    auto synth = corpus::generate_synthetic_corpus(77, n);
    fixture.corpus = std::move(synth.corpus);
    fixture.letters =
        corpus::segment_corpus(fixture.corpus, segmenter::default_section_specs());
    return fixture;
}

void bench_rank_sections_parallel(benchmark::State& state) {
    auto fixture = make_ranking_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            evaluation::rank_sections(fixture.corpus, fixture.letters, Task::bhc));
}

void bench_rank_sections_serial(benchmark::State& state) {
    auto fixture = make_ranking_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            evaluation::rank_sections_serial(fixture.corpus, fixture.letters, Task::bhc));
}

struct ForestFixture {
    std::vector<wordcount::FeatureVector> features;
    std::vector<std::size_t> counts;
};

ForestFixture make_forest_fixture(std::size_t n) {
    Rng rng(5);
    ForestFixture fixture;
    for (std::size_t i = 0; i < n; ++i) {
        wordcount::FeatureVector fv;
        for (char name = 'a'; name < 'a' + 8; ++name)
            fv.values[std::string(1, name)] = rng.uniform();
        double signal = 2.0 * fv.values["a"] + fv.values["b"];
        fixture.features.push_back(std::move(fv));
        fixture.counts.push_back(signal > 1.0 ? 600 : 250);
    }
    return fixture;
}

void bench_train_forest_parallel(benchmark::State& state) {
    auto fixture = make_forest_fixture(static_cast<std::size_t>(state.range(0)));
    wordcount::ForestConfig config;
    config.n_trees = 60;
    config.max_depth = 10;
    config.seed = 12;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            wordcount::train_forest(fixture.features, fixture.counts, 450, config));
}

void bench_train_forest_serial(benchmark::State& state) {
    auto fixture = make_forest_fixture(static_cast<std::size_t>(state.range(0)));
    wordcount::ForestConfig config;
    config.n_trees = 60;
    config.max_depth = 10;
    config.seed = 12;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            wordcount::train_forest_serial(fixture.features, fixture.counts, 450, config));
}

BENCHMARK(bench_search_parallel)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_search_serial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);
BENCHMARK(bench_score_corpus_parallel)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_score_corpus_serial)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_rank_sections_parallel)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_rank_sections_serial)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_train_forest_parallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_train_forest_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
