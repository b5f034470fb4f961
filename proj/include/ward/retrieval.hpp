#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ward/corpus.hpp"
#include "ward/httpx.hpp"
#include "ward/segmenter.hpp"
#include "ward/task.hpp"

namespace ward::retrieval {

struct TaskContextSpec {
    Task task = Task::bhc;
    std::vector<std::string> section_names;

    static TaskContextSpec defaults(Task task);
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // Unit-normalized embedding; must be callable from multiple threads.
    virtual std::vector<float> embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;
};

// Offline deterministic provider: tokens hashed into signed buckets, then
// L2-normalized. Same text, same vector, on every platform.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dimension = 384);
    std::vector<float> embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }
    std::string name() const override { return "hash"; }

private:
    std::size_t dim_;
};

struct HttpEmbeddingConfig {
    std::string base_url;
    std::string model = "nomic-embed-text";
    double timeout_s = 30.0;
    int max_retries = 2;
    double backoff_s = 0.25;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
    std::vector<float> embed(const std::string& text) override;
    std::size_t dimension() const override;
    std::string name() const override { return "http"; }

private:
    HttpEmbeddingConfig config_;
    mutable std::mutex mutex_;
    std::size_t dim_ = 0;  // fixed by the first reply
};

std::string build_task_context(const segmenter::SectionedLetter& letter,
                               const std::optional<corpus::PatientAdmissionSummary>& admission,
                               const TaskContextSpec& spec);

struct IndexEntry {
    std::string hadm_id;
    std::vector<float> vector;
    std::uint32_t target_word_count = 0;
};

struct RetrievalIndex {
    Task task = Task::bhc;
    std::uint32_t dimension = 0;
    std::vector<IndexEntry> entries;  // sorted by hadm_id
};

struct BuildStats {
    std::size_t indexed = 0;
    std::size_t skipped_missing_target = 0;
};

// Embeds every record's task context with up to `concurrency` calls in
// flight; records lacking the gold target are skipped and counted. Entries
// come out sorted by hadm_id so the index bytes are order-insensitive.
RetrievalIndex build_index(const corpus::Corpus& corpus,
                           const std::vector<segmenter::SectionedLetter>& letters,
                           const TaskContextSpec& spec, EmbeddingProvider& provider,
                           std::size_t concurrency = 4, BuildStats* stats = nullptr);

struct SearchHit {
    std::string hadm_id;
    double similarity = 0.0;
};

// Exact exhaustive top-k by inner product, descending, ties by ascending
// hadm_id. search() parallelizes the scan; search_serial() is the reference.
std::vector<SearchHit> search(const RetrievalIndex& index, const std::vector<float>& query,
                              std::size_t k);
std::vector<SearchHit> search_serial(const RetrievalIndex& index, const std::vector<float>& query,
                                     std::size_t k);

enum class WordCountSource { retrieved, fixed, classifier, distribution };
std::string_view word_count_source_name(WordCountSource source);

struct WordCountTarget {
    std::string words_text;
    WordCountSource source = WordCountSource::fixed;
    std::optional<std::string> neighbor_id;
    std::optional<double> similarity;
};

WordCountTarget retrieve_word_count(const RetrievalIndex& index,
                                    const segmenter::SectionedLetter& letter,
                                    const std::optional<corpus::PatientAdmissionSummary>& admission,
                                    const std::string& hadm_id, const TaskContextSpec& spec,
                                    EmbeddingProvider& provider, bool exclude_self);

void save_index(const RetrievalIndex& index, const std::string& path);
RetrievalIndex load_index(const std::string& path, Task task = Task::bhc);

}  // namespace ward::retrieval
