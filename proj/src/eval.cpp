#include "mtab/eval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mtab/util.hpp"

namespace mtab {

const char* query_policy_name(QueryPolicy p) {
    return p == QueryPolicy::all_tables ? "all_tables" : "tables_with_positives";
}

std::optional<QueryPolicy> query_policy_from_name(const std::string& name) {
    if (name == "all_tables") return QueryPolicy::all_tables;
    if (name == "tables_with_positives") return QueryPolicy::tables_with_positives;
    return std::nullopt;
}

std::string variant_pool_id(const std::string& base_id, AugmentVariant v) {
    return base_id + "#" + augment_variant_name(v);
}

bool topk_success(const RankedResult& ranked, const std::string& query_base_id,
                  const RelatednessGraph& graph, const SearchPool& pool, std::size_t k) {
    std::size_t limit = std::min(k, ranked.hits.size());
    for (std::size_t i = 0; i < limit; ++i) {
        const PoolEntry* e = pool.find(ranked.hits[i].first);
        const std::string& base = e ? e->base_id : ranked.hits[i].first;
        if (base != query_base_id && graph.related(query_base_id, base)) return true;
    }
    return false;
}

namespace {

// corpus entries of the pool (augmented variants are candidates, not queries)
std::vector<const PoolEntry*> query_entries(const SearchPool& pool) {
    std::vector<const PoolEntry*> out;
    for (const auto& e : pool.entries)
        if (e.id == e.base_id) out.push_back(&e);
    return out;
}

bool has_positive(const PoolEntry& q, const RelatednessGraph& graph,
                  const std::vector<const PoolEntry*>& candidates) {
    for (const PoolEntry* c : candidates) {
        if (c->id == q.id) continue;
        if (graph.related(q.id, c->id)) return true;
    }
    return false;
}

}  // namespace

PrecisionResult precision_at_k(SearchMethod method, const RelatednessGraph& graph,
                               const SearchPool& pool, const SearchIndexes& indexes,
                               const EmbeddingProvider& provider, std::size_t k,
                               QueryPolicy policy) {
    PrecisionResult res;
    auto queries = query_entries(pool);
    for (const PoolEntry* q : queries) {
        if (policy == QueryPolicy::tables_with_positives && !has_positive(*q, graph, queries))
            continue;
        ++res.queries;
        RankedResult ranked = run_search(method, *q, pool, indexes, provider, k);
        if (topk_success(ranked, q->id, graph, pool, k)) ++res.successes;
    }
    if (res.queries > 0)
        res.precision = static_cast<double>(res.successes) / static_cast<double>(res.queries);
    return res;
}

bool augmented_success(const PoolEntry& base_query, SearchMethod method,
                       const RelatednessGraph& graph, const SearchPool& pool,
                       const SearchIndexes& indexes, const EmbeddingProvider& provider,
                       std::size_t k, bool union_transpose) {
    RankedResult base = run_search(method, base_query, pool, indexes, provider, k);
    if (topk_success(base, base_query.base_id, graph, pool, k)) return true;

    AugmentVariant variants[] = {AugmentVariant::transpose, AugmentVariant::header_to_cell};
    for (AugmentVariant v : variants) {
        if (v == AugmentVariant::transpose && method == SearchMethod::union_ &&
            !union_transpose)
            continue;
        const PoolEntry* variant = pool.find(variant_pool_id(base_query.base_id, v));
        if (!variant) continue;  // missing variant: run skipped
        RankedResult r = run_search(method, *variant, pool, indexes, provider, k);
        if (topk_success(r, base_query.base_id, graph, pool, k)) return true;
    }
    return false;
}

PrecisionResult precision_at_k_augmented(SearchMethod method, const RelatednessGraph& graph,
                                         const SearchPool& pool, const SearchIndexes& indexes,
                                         const EmbeddingProvider& provider, std::size_t k,
                                         QueryPolicy policy, bool union_transpose) {
    PrecisionResult res;
    auto queries = query_entries(pool);
    for (const PoolEntry* q : queries) {
        if (policy == QueryPolicy::tables_with_positives && !has_positive(*q, graph, queries))
            continue;
        ++res.queries;
        if (augmented_success(*q, method, graph, pool, indexes, provider, k, union_transpose))
            ++res.successes;
    }
    if (res.queries > 0)
        res.precision = static_cast<double>(res.successes) / static_cast<double>(res.queries);
    return res;
}

std::string subset_name(const std::set<SourceKind>& subset) {
    if (subset.empty()) return "all";
    std::set<SourceKind> full = {SourceKind::model_card, SourceKind::dataset_card,
                                 SourceKind::github_readme, SourceKind::arxiv_html,
                                 SourceKind::s2_text};
    if (subset == full) return "all";
    std::vector<std::string> parts;
    bool cards = subset.count(SourceKind::model_card) || subset.count(SourceKind::dataset_card);
    if (cards) parts.push_back("M");
    if (subset.count(SourceKind::github_readme)) parts.push_back("G");
    if (subset.count(SourceKind::arxiv_html)) parts.push_back("A");
    if (subset.count(SourceKind::s2_text)) parts.push_back("SS");
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += "+";
        out += p;
    }
    return out.empty() ? "none" : out;
}

PrecisionResult ablate_by_source(SearchMethod method, const RelatednessGraph& graph,
                                 const std::vector<CorpusRecord>& corpus,
                                 const std::set<SourceKind>& subset,
                                 const EmbeddingProvider& provider, std::size_t k,
                                 QueryPolicy policy) {
    std::vector<CorpusRecord> restricted;
    for (const auto& rec : corpus) {
        bool keep = subset.empty();
        for (SourceKind kind : rec.source_kinds)
            if (subset.count(kind)) keep = true;
        if (keep) restricted.push_back(rec);
    }
    if (restricted.empty()) return {};
    SearchPool pool = SearchPool::from_corpus(restricted);
    SearchIndexes indexes = build_indexes(pool, provider);
    return precision_at_k(method, graph, pool, indexes, provider, k, policy);
}

EvalReport run_eval(const EvalConfig& cfg, const std::vector<CorpusRecord>& corpus,
                    const TableGraphs& graphs, const SearchPool& pool,
                    const SearchIndexes& indexes, const EmbeddingProvider& provider,
                    std::string corpus_hash, std::string config_hash, std::uint64_t seed) {
    EvalReport report;
    report.corpus_hash = std::move(corpus_hash);
    report.config_hash = std::move(config_hash);
    report.seed = seed;

    for (SearchMethod method : cfg.methods) {
        for (GraphLabel label : cfg.graphs) {
            const RelatednessGraph& graph = graphs.get(label);

            EvalCell cell;
            cell.method = search_method_name(method);
            cell.graph = graph_label_name(label);
            cell.filter = graph.filter_desc.empty() ? cfg.filter.describe() : graph.filter_desc;
            cell.subset = "all";
            cell.k = cfg.k;
            cell.policy = query_policy_name(cfg.query_policy);
            cell.result = cfg.augmented
                              ? precision_at_k_augmented(method, graph, pool, indexes, provider,
                                                         cfg.k, cfg.query_policy,
                                                         cfg.force_union_transpose)
                              : precision_at_k(method, graph, pool, indexes, provider, cfg.k,
                                               cfg.query_policy);
            report.cells.push_back(cell);

            for (const auto& subset : cfg.source_subsets) {
                EvalCell sub = cell;
                sub.subset = subset_name(subset);
                sub.result = ablate_by_source(method, graph, corpus, subset, provider, cfg.k,
                                              cfg.query_policy);
                report.cells.push_back(sub);
            }
        }
    }
    return report;
}

namespace {

std::string format_precision(const std::optional<double>& p) {
    if (!p) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *p);
    return buf;
}

}  // namespace

void emit_report(const EvalReport& report, const std::filesystem::path& jsonl_path,
                 const std::filesystem::path& text_path) {
    using nlohmann::json;
    std::ofstream out(jsonl_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + jsonl_path.string());
    json header = {{"record", "header"},
                   {"corpus_hash", report.corpus_hash},
                   {"config_hash", report.config_hash},
                   {"seed", report.seed}};
    out << header.dump() << "\n";
    for (const auto& c : report.cells) {
        json row = {{"method", c.method},   {"graph", c.graph},
                    {"filter", c.filter},   {"subset", c.subset},
                    {"k", c.k},             {"policy", c.policy},
                    {"queries", c.result.queries}, {"successes", c.result.successes}};
        if (c.result.precision)
            row["precision"] = *c.result.precision;
        else
            row["precision"] = nullptr;
        out << row.dump() << "\n";
    }
    out.close();

    // aligned text table
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "graph", "filter", "subset", "k", "policy", "queries",
                    "successes", "precision"});
    for (const auto& c : report.cells)
        rows.push_back({c.method, c.graph, c.filter, c.subset, std::to_string(c.k), c.policy,
                        std::to_string(c.result.queries), std::to_string(c.result.successes),
                        format_precision(c.result.precision)});
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());

    std::ofstream txt(text_path, std::ios::binary);
    if (!txt) throw std::runtime_error("cannot write report: " + text_path.string());
    txt << "# corpus " << report.corpus_hash << "  config " << report.config_hash << "  seed "
        << report.seed << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) txt << "  ";
            txt << row[i];
            if (i + 1 < row.size())
                txt << std::string(widths[i] - row[i].size(), ' ');
        }
        txt << "\n";
    }
}

EvalReport load_report(const std::filesystem::path& jsonl_path) {
    using nlohmann::json;
    std::ifstream in(jsonl_path);
    if (!in) throw std::runtime_error("cannot open report: " + jsonl_path.string());
    EvalReport report;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        if (row.value("record", "") == "header") {
            report.corpus_hash = row.value("corpus_hash", "");
            report.config_hash = row.value("config_hash", "");
            report.seed = row.value("seed", 0ull);
            continue;
        }
        EvalCell c;
        c.method = row.value("method", "");
        c.graph = row.value("graph", "");
        c.filter = row.value("filter", "");
        c.subset = row.value("subset", "");
        c.k = row.value("k", std::size_t{1});
        c.policy = row.value("policy", "");
        c.result.queries = row.value("queries", std::size_t{0});
        c.result.successes = row.value("successes", std::size_t{0});
        if (row.contains("precision") && !row["precision"].is_null())
            c.result.precision = row["precision"].get<double>();
        report.cells.push_back(std::move(c));
    }
    return report;
}

}  // namespace mtab
