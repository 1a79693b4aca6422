#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "mtab/quality.hpp"
#include "mtab/table.hpp"

namespace mtab {

// Text -> unit-normalized vector. Deterministic: identical text gives an
// identical vector; zero-token input gives the zero vector.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::vector<float> embed(const std::string& text) const = 0;
};

// Signed feature hashing of case-folded word tokens (fnv1a64), L2-normalized.
// Dependency-free stand-in for a learned sentence encoder; external vectors
// plug in via the vector-file interface.
class HashingEmbedder : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {}
    std::string name() const override { return "hashing-" + std::to_string(dim_); }
    std::size_t dim() const override { return dim_; }
    std::vector<float> embed(const std::string& text) const override;

private:
    std::size_t dim_;
};

struct Posting {
    std::uint32_t doc = 0;  // index into doc_ids
    std::uint32_t tf = 0;
};

// BM25 term index over metadata contexts. idf = ln(1 + (N - df + 0.5)/(df + 0.5)),
// so scores stay non-negative.
struct TermIndex {
    std::vector<std::string> doc_ids;  // sorted
    std::vector<std::uint32_t> doc_lengths;
    std::map<std::string, std::vector<Posting>> postings;  // postings sorted by doc
    double k1 = 0.9;
    double b = 0.4;

    double avg_doc_length() const;
};

TermIndex build_term_index(const std::vector<std::pair<std::string, std::string>>& docs,
                           double k1 = 0.9, double b = 0.4);

// Private binary format with a version byte; regeneration is bit-identical.
void save_term_index(const std::filesystem::path& path, const TermIndex& index);
TermIndex load_term_index(const std::filesystem::path& path);

struct VectorIndex {
    std::size_t dim = 0;
    std::vector<std::string> ids;  // sorted
    std::vector<float> data;       // row-major; rows unit or zero

    const float* row(std::size_t i) const { return data.data() + i * dim; }
};

VectorIndex build_vector_index(const std::vector<std::pair<std::string, std::string>>& texts,
                               const EmbeddingProvider& provider);

// Text interchange format: header "dim <N>", then "<id>\t<floats,comma-separated>".
void save_vector_file(const std::filesystem::path& path, const VectorIndex& index);
VectorIndex load_vector_file(const std::filesystem::path& path);

struct RankedResult {
    std::string query_id;
    std::vector<std::pair<std::string, double>> hits;  // score desc, ties by ascending id
    bool flagged = false;  // degenerate query input (headerless, zero vector, ...)
};

// One searchable unit: a corpus table or an augmented variant.
struct PoolEntry {
    std::string id;          // table_id, or "<base>#<variant>" for augmentations
    std::string content_id;  // content hash of the cells (self/duplicate exclusion)
    std::string base_id;     // table_id whose relatedness this entry inherits
    CanonicalTable table;
    std::string context_text;
    std::vector<SourceKind> source_kinds;
};

struct SearchPool {
    std::vector<PoolEntry> entries;  // sorted by id
    std::map<std::string, std::size_t> by_id;

    static SearchPool from_corpus(const std::vector<CorpusRecord>& corpus);
    void add(PoolEntry entry);
    void finalize();  // sort + rebuild by_id
    const PoolEntry* find(const std::string& id) const;
};

struct SearchIndexes {
    TermIndex terms;               // metadata contexts (entries with empty context excluded)
    VectorIndex table_vectors;     // serialize_table outputs
    VectorIndex metadata_vectors;  // contexts, for the hybrid dense stage
    std::vector<std::vector<std::vector<float>>> column_embeddings;  // per entry, per column
    std::size_t contextless = 0;   // entries excluded from metadata indices
};

SearchIndexes build_indexes(const SearchPool& pool, const EmbeddingProvider& provider,
                            double k1 = 0.9, double b = 0.4);

// Candidates matching the query's id or content hash are never returned.
struct QueryExclusion {
    std::string id;
    std::string content_id;
    bool excluded(const PoolEntry& e) const {
        return e.id == id || e.content_id == content_id;
    }
};

// Query header tokens matched by case-folded substring against serialized
// candidate content; score = hit count. Headerless queries fall back to
// first-row tokens (flagged).
RankedResult keyword_search(const PoolEntry& query, const SearchPool& pool, std::size_t k);

// Join keys = distinct body values of the query's right-most column; score =
// best per-column value overlap. Headers excluded from value sets.
RankedResult join_search(const PoolEntry& query, const SearchPool& pool, std::size_t k);

// Greedy one-to-one column alignment under cosine similarity;
// score = mean(matched sims) * matched / max(query cols, candidate cols).
RankedResult union_search(const PoolEntry& query, const SearchPool& pool,
                          const SearchIndexes& indexes, const EmbeddingProvider& provider,
                          std::size_t k);

RankedResult sparse_search(const std::string& query_context, const TermIndex& index,
                           std::size_t k, const QueryExclusion& exclude,
                           const SearchPool& pool);

RankedResult dense_search(const PoolEntry& query, const SearchPool& pool,
                          const VectorIndex& index, const EmbeddingProvider& provider,
                          std::size_t k);

// Sparse top-100, re-ranked by metadata cosine; results are a subset of the
// sparse candidates.
RankedResult hybrid_search(const std::string& query_context, const PoolEntry& query,
                           const SearchPool& pool, const SearchIndexes& indexes,
                           const EmbeddingProvider& provider, std::size_t k);

inline constexpr std::size_t kSparseQueryTermLimit = 1024;
inline constexpr std::size_t kHybridCandidates = 100;

// column text for union embeddings: body cells, header excluded
std::string column_text(const CanonicalTable& t, std::size_t col);

double cosine(const std::vector<float>& a, const std::vector<float>& b);

enum class SearchMethod { keyword, join, union_, dense, sparse, hybrid };
const char* search_method_name(SearchMethod m);
std::optional<SearchMethod> search_method_from_name(const std::string& name);

// Uniform dispatch used by evaluation and the CLI.
RankedResult run_search(SearchMethod method, const PoolEntry& query, const SearchPool& pool,
                        const SearchIndexes& indexes, const EmbeddingProvider& provider,
                        std::size_t k);

}  // namespace mtab
