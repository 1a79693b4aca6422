#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mtab/augment.hpp"
#include "mtab/relate.hpp"
#include "mtab/search.hpp"

namespace mtab {

enum class QueryPolicy { all_tables, tables_with_positives };
const char* query_policy_name(QueryPolicy p);
std::optional<QueryPolicy> query_policy_from_name(const std::string& name);

struct EvalConfig {
    std::vector<SearchMethod> methods;
    std::vector<GraphLabel> graphs;
    CitationFilter filter;
    std::size_t k = 1;
    QueryPolicy query_policy = QueryPolicy::tables_with_positives;
    bool augmented = false;
    // union search sits out transpose-augmented runs unless forced
    bool force_union_transpose = false;
    std::vector<std::set<SourceKind>> source_subsets;  // empty -> full corpus only
};

struct PrecisionResult {
    std::size_t queries = 0;
    std::size_t successes = 0;
    std::optional<double> precision;  // null when queries == 0
};

struct EvalCell {
    std::string method;
    std::string graph;
    std::string filter;
    std::string subset;  // "all" for the unrestricted run
    std::size_t k = 1;
    std::string policy;
    PrecisionResult result;
};

struct EvalReport {
    std::string corpus_hash;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<EvalCell> cells;
};

// Success for one query: any of its top-k results is graph-related. Augmented
// pool entries count through their base_id.
bool topk_success(const RankedResult& ranked, const std::string& query_base_id,
                  const RelatednessGraph& graph, const SearchPool& pool, std::size_t k);

// Queries are the corpus entries of the pool (base_id == id), optionally
// restricted to those with at least one related table.
PrecisionResult precision_at_k(SearchMethod method, const RelatednessGraph& graph,
                               const SearchPool& pool, const SearchIndexes& indexes,
                               const EmbeddingProvider& provider, std::size_t k,
                               QueryPolicy policy);

// Any-of-three protocol: base query, its transpose, and its header-fused
// variant each run once; success is the disjunction. Variants are looked up
// in the pool as "<base>#transpose" / "<base>#header2cell"; a missing variant
// skips that run. With no variants present this reduces to plain success.
bool augmented_success(const PoolEntry& base_query, SearchMethod method,
                       const RelatednessGraph& graph, const SearchPool& pool,
                       const SearchIndexes& indexes, const EmbeddingProvider& provider,
                       std::size_t k, bool union_transpose = false);

PrecisionResult precision_at_k_augmented(SearchMethod method, const RelatednessGraph& graph,
                                         const SearchPool& pool, const SearchIndexes& indexes,
                                         const EmbeddingProvider& provider, std::size_t k,
                                         QueryPolicy policy, bool union_transpose = false);

// Pool id for an augmented variant of a base table.
std::string variant_pool_id(const std::string& base_id, AugmentVariant v);

// Canonical short name for a source subset (M, G, A, SS and + unions;
// dataset cards ride with model cards under M).
std::string subset_name(const std::set<SourceKind>& subset);

// Restricts queries and candidates to entries with at least one source kind
// in the subset, rebuilds indices, and evaluates.
PrecisionResult ablate_by_source(SearchMethod method, const RelatednessGraph& graph,
                                 const std::vector<CorpusRecord>& corpus,
                                 const std::set<SourceKind>& subset,
                                 const EmbeddingProvider& provider, std::size_t k,
                                 QueryPolicy policy);

EvalReport run_eval(const EvalConfig& cfg, const std::vector<CorpusRecord>& corpus,
                    const TableGraphs& graphs, const SearchPool& pool,
                    const SearchIndexes& indexes, const EmbeddingProvider& provider,
                    std::string corpus_hash, std::string config_hash, std::uint64_t seed);

// Machine-readable line-delimited records plus an aligned-column text table.
void emit_report(const EvalReport& report, const std::filesystem::path& jsonl_path,
                 const std::filesystem::path& text_path);

EvalReport load_report(const std::filesystem::path& jsonl_path);

}  // namespace mtab
