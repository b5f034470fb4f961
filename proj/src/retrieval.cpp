#include "ward/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <thread>

#include "ward/csv.hpp"
#include "ward/error.hpp"
#include "ward/parallel.hpp"
#include "ward/rng.hpp"
#include "ward/text.hpp"

namespace ward::retrieval {

TaskContextSpec TaskContextSpec::defaults(Task task) {
    TaskContextSpec spec;
    spec.task = task;
    spec.section_names = {"chief_complaint", "diagnoses", "history_of_present_illness"};
    if (task == Task::di) {
        spec.section_names.insert(spec.section_names.end(),
                                  {"admission_medications", "discharge_medications",
                                   "discharge_disposition", "discharge_diagnoses",
                                   "discharge_condition"});
    }
    return spec;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dimension) : dim_(dimension) {
    if (dimension == 0) raise(ErrorKind::validation, "embedding dimension must be positive");
}

std::vector<float> HashEmbeddingProvider::embed(const std::string& text) {
    std::vector<double> acc(dim_, 0.0);
    std::size_t i = 0;
    bool any = false;
    while (i < text.size()) {
        while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) break;
        std::string token = to_lower_ascii(std::string_view(text).substr(start, i - start));
        std::uint64_t h = fnv1a64(token);
        double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
        acc[h % dim_] += sign;
        any = true;
    }
    if (!any) raise(ErrorKind::validation, "cannot embed text without tokens");
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<float> out(dim_);
    if (norm == 0.0) {
        // Signed buckets cancelled exactly; fall back to a fixed axis so the
        // vector stays unit length.
        out[0] = 1.0f;
        return out;
    }
    for (std::size_t k = 0; k < dim_; ++k) out[k] = static_cast<float>(acc[k] / norm);
    return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {
    httpx::validate_base_url(config_.base_url);
}

std::vector<float> HttpEmbeddingProvider::embed(const std::string& text) {
    httpx::HttpConfig http;
    http.base_url = config_.base_url;
    http.timeout_s = config_.timeout_s;
    http.max_retries = config_.max_retries;
    http.backoff_s = config_.backoff_s;
    nlohmann::json payload{{"model", config_.model}, {"prompt", text}};
    auto res = httpx::post_json(http, "/api/embeddings", payload);
    if (!res.body.contains("embedding") || !res.body["embedding"].is_array())
        raise(ErrorKind::contract, "embedding reply missing 'embedding' array");
    std::vector<float> v;
    v.reserve(res.body["embedding"].size());
    for (const auto& x : res.body["embedding"]) {
        if (!x.is_number()) raise(ErrorKind::contract, "embedding array holds a non-number");
        v.push_back(x.get<float>());
    }
    if (v.empty()) raise(ErrorKind::contract, "embedding reply is empty");
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) raise(ErrorKind::contract, "embedding reply has zero norm");
    for (auto& x : v) x = static_cast<float>(x / norm);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (dim_ == 0) dim_ = v.size();
        else if (dim_ != v.size())
            raise(ErrorKind::contract, "embedding dimension changed between calls: " +
                                           std::to_string(dim_) + " then " + std::to_string(v.size()));
    }
    return v;
}

std::size_t HttpEmbeddingProvider::dimension() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return dim_;
}

std::string build_task_context(const segmenter::SectionedLetter& letter,
                               const std::optional<corpus::PatientAdmissionSummary>& admission,
                               const TaskContextSpec& spec) {
    std::vector<std::string> blocks;
    for (const auto& name : spec.section_names) {
        if (name == "brief_hospital_course" || name == "discharge_instructions") continue;
        auto body = corpus::section_text_or_aux(letter, admission, name);
        if (body && !body->empty()) blocks.push_back(section_title(name) + ":\n" + *body);
    }
    if (blocks.empty())
        raise(ErrorKind::validation, "retrieval context is empty: none of the listed sections present");
    return join(blocks, "\n\n");
}

namespace {

void normalize_checked(std::vector<float>& v, const std::string& hadm_id) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0.0)
        raise(ErrorKind::contract, "zero-norm embedding for hadm_id " + hadm_id);
    if (std::abs(norm - 1.0) > 1e-6)
        for (auto& x : v) x = static_cast<float>(x / norm);
}

}  // namespace

RetrievalIndex build_index(const corpus::Corpus& corpus,
                           const std::vector<segmenter::SectionedLetter>& letters,
                           const TaskContextSpec& spec, EmbeddingProvider& provider,
                           std::size_t concurrency, BuildStats* stats) {
    if (corpus.records.size() != letters.size())
        raise(ErrorKind::contract, "build_index: corpus/letter size mismatch");
    if (concurrency == 0) concurrency = 1;

    struct Pending {
        std::size_t record = 0;
        std::string context;
        std::uint32_t target_words = 0;
    };
    std::vector<Pending> pending;
    BuildStats local;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        auto targets = segmenter::extract_targets(letters[i]);
        const std::optional<std::string>& gold = spec.task == Task::bhc ? targets.bhc : targets.di;
        if (!gold) {
            local.skipped_missing_target += 1;
            continue;
        }
        Pending p;
        p.record = i;
        p.context = build_task_context(letters[i], corpus.records[i].admission, spec);
        p.target_words = static_cast<std::uint32_t>(segmenter::word_count(*gold));
        pending.push_back(std::move(p));
    }

    std::vector<std::vector<float>> vectors(pending.size());
    std::vector<std::exception_ptr> failures(pending.size());
    std::atomic<std::size_t> cursor{0};
    std::size_t workers = std::min(concurrency, std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= pending.size()) return;
                try {
                    vectors[i] = provider.embed(pending[i].context);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();

    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (!failures[i]) continue;
        const std::string& id = corpus.records[pending[i].record].hadm_id;
        try {
            std::rethrow_exception(failures[i]);
        } catch (const Error& e) {
            raise(e.kind(), std::string(e.what()) + " (embedding hadm_id " + id + ")");
        } catch (const std::exception& e) {
            raise(ErrorKind::transport, std::string(e.what()) + " (embedding hadm_id " + id + ")");
        }
    }

    RetrievalIndex index;
    index.task = spec.task;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        IndexEntry entry;
        entry.hadm_id = corpus.records[pending[i].record].hadm_id;
        entry.vector = std::move(vectors[i]);
        entry.target_word_count = pending[i].target_words;
        normalize_checked(entry.vector, entry.hadm_id);
        if (index.dimension == 0) index.dimension = static_cast<std::uint32_t>(entry.vector.size());
        else if (index.dimension != entry.vector.size())
            raise(ErrorKind::contract, "embedding dimension mismatch at hadm_id " + entry.hadm_id);
        index.entries.push_back(std::move(entry));
    }
    std::sort(index.entries.begin(), index.entries.end(),
              [](const IndexEntry& a, const IndexEntry& b) { return a.hadm_id < b.hadm_id; });
    local.indexed = index.entries.size();
    if (stats) *stats = local;
    return index;
}

namespace {

std::vector<SearchHit> finish_search(const RetrievalIndex& index, const std::vector<double>& sims,
                                     std::size_t k) {
    std::vector<std::size_t> order(index.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto better = [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return index.entries[a].hadm_id < index.entries[b].hadm_id;
    };
    std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      better);
    std::vector<SearchHit> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        out.push_back({index.entries[order[i]].hadm_id, sims[order[i]]});
    return out;
}

void check_query(const RetrievalIndex& index, const std::vector<float>& query, std::size_t k) {
    if (index.entries.empty()) raise(ErrorKind::validation, "retrieval index is empty");
    if (k == 0) raise(ErrorKind::validation, "k must be at least 1");
    if (query.size() != index.dimension)
        raise(ErrorKind::contract, "query dimension " + std::to_string(query.size()) +
                                       " does not match index dimension " +
                                       std::to_string(index.dimension));
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
    return acc;
}

}  // namespace

std::vector<SearchHit> search(const RetrievalIndex& index, const std::vector<float>& query,
                              std::size_t k) {
    check_query(index, query, k);
    std::vector<double> sims(index.entries.size());
    const long long total = static_cast<long long>(index.entries.size());
    WARD_PRAGMA_OMP(parallel for schedule(static))
    for (long long i = 0; i < total; ++i)
        sims[static_cast<std::size_t>(i)] = dot(index.entries[static_cast<std::size_t>(i)].vector, query);
    return finish_search(index, sims, k);
}

std::vector<SearchHit> search_serial(const RetrievalIndex& index, const std::vector<float>& query,
                                     std::size_t k) {
    check_query(index, query, k);
    std::vector<double> sims(index.entries.size());
    for (std::size_t i = 0; i < index.entries.size(); ++i) sims[i] = dot(index.entries[i].vector, query);
    return finish_search(index, sims, k);
}

std::string_view word_count_source_name(WordCountSource source) {
    switch (source) {
        case WordCountSource::retrieved: return "retrieved";
        case WordCountSource::fixed: return "fixed";
        case WordCountSource::classifier: return "classifier";
        case WordCountSource::distribution: return "distribution";
    }
    return "fixed";
}

WordCountTarget retrieve_word_count(const RetrievalIndex& index,
                                    const segmenter::SectionedLetter& letter,
                                    const std::optional<corpus::PatientAdmissionSummary>& admission,
                                    const std::string& hadm_id, const TaskContextSpec& spec,
                                    EmbeddingProvider& provider, bool exclude_self) {
    std::string context = build_task_context(letter, admission, spec);
    std::vector<float> query = provider.embed(context);
    std::size_t k = exclude_self ? 2 : 1;
    auto hits = search(index, query, k);
    const SearchHit* chosen = nullptr;
    for (const auto& hit : hits) {
        if (exclude_self && hit.hadm_id == hadm_id) continue;
        chosen = &hit;
        break;
    }
    if (!chosen)
        raise(ErrorKind::not_found,
              "no retrieval neighbor for hadm_id " + hadm_id +
                  " after self-exclusion; use a fixed, classifier, or distribution word-count strategy");
    auto it = std::lower_bound(index.entries.begin(), index.entries.end(), chosen->hadm_id,
                               [](const IndexEntry& e, const std::string& id) { return e.hadm_id < id; });
    if (it == index.entries.end() || it->hadm_id != chosen->hadm_id)
        raise(ErrorKind::contract, "search returned an id missing from the index");
    WordCountTarget target;
    target.words_text = std::to_string(it->target_word_count);
    target.source = WordCountSource::retrieved;
    target.neighbor_id = chosen->hadm_id;
    target.similarity = chosen->similarity;
    return target;
}

namespace {

void append_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f32(std::string& out, float v) {
    append_u32(out, std::bit_cast<std::uint32_t>(v));
}

struct Reader {
    const std::string& data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > data.size()) raise(ErrorKind::schema, "truncated index file");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(data[pos]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(data[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

constexpr std::uint32_t kIndexVersion = 1;

}  // namespace

void save_index(const RetrievalIndex& index, const std::string& path) {
    std::string out;
    out += "WSIX";
    append_u32(out, kIndexVersion);
    append_u32(out, index.dimension);
    append_u64(out, index.entries.size());
    for (const auto& entry : index.entries) {
        if (entry.hadm_id.size() > 0xFFFF)
            raise(ErrorKind::validation, "hadm_id too long to persist: " + entry.hadm_id);
        if (entry.vector.size() != index.dimension)
            raise(ErrorKind::contract, "entry dimension mismatch at hadm_id " + entry.hadm_id);
        append_u16(out, static_cast<std::uint16_t>(entry.hadm_id.size()));
        out += entry.hadm_id;
        for (float v : entry.vector) append_f32(out, v);
        append_u32(out, entry.target_word_count);
    }
    atomic_write_file(path, out);
}

RetrievalIndex load_index(const std::string& path, Task task) {
    std::string data = read_file(path);
    Reader r{data};
    if (r.bytes(4) != "WSIX") raise(ErrorKind::schema, "not an index file (bad magic): " + path);
    std::uint32_t version = r.u32();
    if (version != kIndexVersion)
        raise(ErrorKind::schema, "unsupported index version " + std::to_string(version));
    RetrievalIndex index;
    index.task = task;
    index.dimension = r.u32();
    std::uint64_t count = r.u64();
    if (count > 0 && index.dimension == 0) raise(ErrorKind::schema, "index with entries but dimension 0");
    index.entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        IndexEntry entry;
        std::uint16_t id_len = r.u16();
        entry.hadm_id = r.bytes(id_len);
        entry.vector.resize(index.dimension);
        for (std::uint32_t d = 0; d < index.dimension; ++d) entry.vector[d] = r.f32();
        entry.target_word_count = r.u32();
        index.entries.push_back(std::move(entry));
    }
    if (r.pos != data.size()) raise(ErrorKind::schema, "trailing bytes in index file: " + path);
    return index;
}

}  // namespace ward::retrieval
