// mtab: pipeline driver. Stages write their outputs into a workspace
// directory and record hashes in manifest.json, so re-running an unchanged
// stage is a no-op and every artifact is reproducible from inputs + config +
// seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtab/augment.hpp"
#include "mtab/eval.hpp"
#include "mtab/extract.hpp"
#include "mtab/ingest.hpp"
#include "mtab/quality.hpp"
#include "mtab/relate.hpp"
#include "mtab/search.hpp"
#include "mtab/table.hpp"
#include "mtab/util.hpp"
#include "mtab/workspace.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace mtab;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingStage : std::runtime_error {
    explicit MissingStage(const std::string& stage)
        : std::runtime_error("missing dependency stage: " + stage +
                             " (run `mtab " + stage + "` first)") {}
};

struct Options {
    std::string workspace = ".";
    std::string config_path;
    bool force = false;
    std::uint64_t seed = 1;

    std::string snapshot;
    std::string relation = "direct";
    bool intent = false;
    bool influential = false;
    std::vector<std::string> graphs;
    std::vector<std::string> methods;
    std::vector<std::string> variants;
    std::size_t k = 0;  // 0: per-command default
    std::vector<std::string> sources;
    std::string vectors;
    std::string query;
    bool augmented = false;
    double drop_rate = -1.0;
};

fs::path ws(const Options& o) { return fs::path(o.workspace); }

Config effective_config(const Options& o) {
    Config cfg;
    if (!o.config_path.empty()) cfg = Config::from_file(o.config_path);
    // flags override config
    cfg.set("seed", std::to_string(o.seed));
    if (!o.snapshot.empty()) cfg.set("snapshot", o.snapshot);
    return cfg;
}

void require_output(const fs::path& path, const std::string& stage) {
    if (!fs::exists(path)) throw MissingStage(stage);
}

std::vector<fs::path> snapshot_files(const fs::path& root) {
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(root);
         it != fs::recursive_directory_iterator(); ++it)
        if (it->is_regular_file()) files.push_back(it->path());
    std::sort(files.begin(), files.end());
    return files;
}

WorkspaceManifest manifest(const Options& o) {
    return WorkspaceManifest::load(ws(o) / "manifest.json");
}

// returns true when the stage can be skipped
bool stage_current(const Options& o, const std::string& stage, const std::string& input_hash,
                   const std::string& config_hash) {
    if (o.force) return false;
    WorkspaceManifest m = manifest(o);
    if (!m.up_to_date(stage, input_hash, config_hash)) return false;
    for (const auto& [rel, hash] : m.stages.at(stage).outputs) {
        fs::path p = ws(o) / rel;
        if (!fs::exists(p) || hash_file(p) != hash) return false;
    }
    std::cout << stage << ": up to date\n";
    return true;
}

void record_stage(const Options& o, const std::string& stage, const std::string& input_hash,
                  const std::string& config_hash, const std::vector<std::string>& outputs) {
    WorkspaceManifest m = manifest(o);
    StageRecord rec;
    rec.input_hash = input_hash;
    rec.config_hash = config_hash;
    for (const auto& rel : outputs) rec.outputs[rel] = hash_file(ws(o) / rel);
    m.record(stage, std::move(rec));
    m.save(ws(o) / "manifest.json");
}

CitationFilter filter_from(const Options& o) {
    CitationFilter f;
    if (o.relation == "direct")
        f.relation = RelationType::direct;
    else if (o.relation == "overlap")
        f.relation = RelationType::overlap;
    else
        throw UsageError("--relation must be direct or overlap");
    f.require_intent = o.intent;
    f.require_influential = o.influential;
    return f;
}

// --- stages ------------------------------------------------------------------

int cmd_ingest(const Options& o) {
    Config cfg = effective_config(o);
    std::string snapshot = cfg.get("snapshot");
    if (snapshot.empty()) throw UsageError("ingest needs --snapshot (or `snapshot` in config)");
    fs::path root(snapshot);
    if (!fs::exists(root)) throw DataError("snapshot directory not found: " + snapshot);

    std::string input_hash = hash_files(snapshot_files(root));
    std::string config_hash = cfg.content_hash();
    if (stage_current(o, "ingest", input_hash, config_hash)) return 0;

    SnapshotStats stats;
    auto docs = load_snapshot(root, &stats);

    ordered_json out;
    out["snapshot"] = fs::absolute(root).lexically_normal().string();
    out["loaded"] = stats.loaded;
    out["skipped_empty"] = stats.skipped_empty;
    out["skipped_unreadable"] = stats.skipped_unreadable;
    ordered_json doc_list = ordered_json::array();
    for (const auto& d : docs)
        doc_list.push_back({{"doc_id", d.doc_id}, {"kind", source_kind_name(d.source_kind)}});
    out["documents"] = doc_list;
    atomic_write(ws(o) / "ingest.json", out.dump(2) + "\n");

    record_stage(o, "ingest", input_hash, config_hash, {"ingest.json"});
    std::cout << "ingest: " << stats.loaded << " documents (" << stats.skipped_empty
              << " empty skipped)\n";
    return 0;
}

fs::path snapshot_from_ingest(const Options& o) {
    fs::path ingest_json = ws(o) / "ingest.json";
    require_output(ingest_json, "ingest");
    std::ifstream in(ingest_json);
    ordered_json doc = ordered_json::parse(in);
    return fs::path(doc.at("snapshot").get<std::string>());
}

int cmd_extract(const Options& o) {
    Config cfg = effective_config(o);
    fs::path root = snapshot_from_ingest(o);

    std::string input_hash = hash_files({ws(o) / "ingest.json"});
    std::string config_hash = cfg.content_hash();
    if (stage_current(o, "extract", input_hash, config_hash)) return 0;

    auto docs = load_snapshot(root);
    std::map<std::string, std::vector<LinkRef>> doc_links;
    SnapshotStats link_stats;
    for (const auto& d : docs) {
        auto links = extract_links(d.body, &link_stats);
        for (auto& l : links) l = classify_link(std::move(l));
        doc_links[d.doc_id] = std::move(links);
    }

    AliasTable aliases;
    fs::path alias_path = root / "meta" / "aliases.tsv";
    if (fs::exists(alias_path)) aliases = load_alias_table(alias_path);

    std::map<std::string, std::string> title_to_id;
    fs::path papers_path = root / "meta" / "papers.jsonl";
    if (fs::exists(papers_path)) {
        for (const auto& [id, rec] : load_papers_jsonl(papers_path))
            if (!rec.title.empty()) title_to_id[to_lower(rec.title)] = id;
    }

    WhitespaceAlignmentRecoverer recoverer;
    CorpusBuild build = build_corpus(docs, doc_links, aliases, title_to_id, &recoverer);

    save_entries_jsonl(ws(o) / "extracted.jsonl", build.entries);
    std::vector<ModelRecord> models;
    for (const auto& m : build.models) {
        ModelRecord rec;
        rec.model_id = m.model_id;
        rec.papers = m.papers;
        rec.linked_models = m.linked_models;
        rec.base_models = m.base_models;
        rec.datasets = m.datasets;
        models.push_back(std::move(rec));
    }
    save_models_jsonl(ws(o) / "models.jsonl", models);

    record_stage(o, "extract", input_hash, config_hash, {"extracted.jsonl", "models.jsonl"});
    std::cout << "extract: " << build.entries.size() << " raw tables, " << models.size()
              << " models\n";
    return 0;
}

int cmd_clean(const Options& o) {
    Config cfg = effective_config(o);
    fs::path in_path = ws(o) / "extracted.jsonl";
    require_output(in_path, "extract");

    std::string input_hash = hash_files({in_path});
    std::string config_hash = cfg.content_hash();
    if (stage_current(o, "clean", input_hash, config_hash)) return 0;

    auto entries = load_entries_jsonl(in_path);
    entries = clean_entries(std::move(entries));
    FilterConfig filter;
    filter.min_rows = static_cast<std::size_t>(cfg.get_int("filter.min_rows", 1));
    filter.min_cols = static_cast<std::size_t>(cfg.get_int("filter.min_cols", 2));
    filter.include_s2 = cfg.get_bool("filter.include_s2", false);
    entries = strategic_filter(std::move(entries), filter);
    save_entries_jsonl(ws(o) / "cleaned.jsonl", entries);

    record_stage(o, "clean", input_hash, config_hash, {"cleaned.jsonl"});
    std::cout << "clean: " << entries.size() << " tables after repair + filtering\n";
    return 0;
}

int cmd_dedup(const Options& o) {
    Config cfg = effective_config(o);
    fs::path in_path = ws(o) / "cleaned.jsonl";
    require_output(in_path, "clean");

    std::string input_hash = hash_files({in_path});
    std::string config_hash = cfg.content_hash();
    if (stage_current(o, "dedup", input_hash, config_hash)) return 0;

    DedupResult dd = dedup(load_entries_jsonl(in_path));
    save_corpus_jsonl(ws(o) / "corpus.jsonl", dd.corpus);
    save_frequencies_tsv(ws(o) / "frequencies.tsv", dd.frequencies);

    record_stage(o, "dedup", input_hash, config_hash, {"corpus.jsonl", "frequencies.tsv"});
    std::cout << "dedup: " << dd.corpus.size() << " canonical tables\n";
    return 0;
}

int cmd_augment(const Options& o) {
    Config cfg = effective_config(o);
    fs::path in_path = ws(o) / "corpus.jsonl";
    require_output(in_path, "dedup");

    std::vector<AugmentVariant> variants;
    std::vector<std::string> names =
        o.variants.empty() ? std::vector<std::string>{"transpose", "header2cell"} : o.variants;
    for (const auto& n : names) {
        auto v = augment_variant_from_name(n);
        if (!v) throw UsageError("unknown --variant: " + n);
        variants.push_back(*v);
    }
    double rate = o.drop_rate >= 0 ? o.drop_rate : cfg.get_double("augment.drop_rate", 0.1);
    cfg.set("augment.variants", [&] {
        std::string joined;
        for (const auto& n : names) joined += (joined.empty() ? "" : ",") + n;
        return joined;
    }());
    cfg.set("augment.drop_rate", std::to_string(rate));

    std::string input_hash = hash_files({in_path});
    std::string config_hash = cfg.content_hash();
    if (stage_current(o, "augment", input_hash, config_hash)) return 0;

    auto corpus = load_corpus_jsonl(in_path);
    std::vector<AugmentedTable> out;
    for (const auto& rec : corpus) {
        for (AugmentVariant v : variants) {
            switch (v) {
                case AugmentVariant::transpose:
                    out.push_back(transpose(rec.table));
                    break;
                case AugmentVariant::header_to_cell:
                    if (rec.table.header_row_count >= 1)
                        out.push_back(header_to_cell(rec.table));
                    break;
                case AugmentVariant::shuffle_col:
                    out.push_back(shuffle_columns(rec.table, o.seed));
                    break;
                case AugmentVariant::shuffle_row:
                    out.push_back(shuffle_rows(rec.table, o.seed));
                    break;
                case AugmentVariant::drop_cell:
                    out.push_back(drop_cells(rec.table, rate, o.seed));
                    break;
            }
        }
    }
    save_augmented_jsonl(ws(o) / "augmented.jsonl", out);

    record_stage(o, "augment", input_hash, config_hash, {"augmented.jsonl"});
    std::cout << "augment: " << out.size() << " variants (" << kRngAlgorithm << ", seed "
              << o.seed << ")\n";
    return 0;
}

int cmd_relate(const Options& o) {
    Config cfg = effective_config(o);
    fs::path corpus_path = ws(o) / "corpus.jsonl";
    require_output(corpus_path, "dedup");
    fs::path models_path = ws(o) / "models.jsonl";
    require_output(models_path, "extract");
    fs::path papers_path = snapshot_from_ingest(o) / "meta" / "papers.jsonl";

    CitationFilter filter = filter_from(o);
    cfg.set("relate.filter", filter.describe());

    std::vector<fs::path> inputs = {corpus_path, models_path};
    if (fs::exists(papers_path)) inputs.push_back(papers_path);
    std::string input_hash = hash_files(inputs);
    std::string config_hash = cfg.content_hash();
    if (stage_current(o, "relate", input_hash, config_hash)) return 0;

    auto corpus = load_corpus_jsonl(corpus_path);
    auto models = load_models_jsonl(models_path);
    CitationIndex papers;
    if (fs::exists(papers_path)) papers = load_papers_jsonl(papers_path);

    std::vector<TableModels> tables;
    for (const auto& rec : corpus) tables.push_back({rec.table.table_id, rec.model_ids});
    TableGraphs graphs = build_table_graphs(tables, models, papers, filter);
    save_edges_tsv(ws(o) / "edges.tsv", graphs);

    record_stage(o, "relate", input_hash, config_hash, {"edges.tsv"});
    std::cout << "relate [" << filter.describe() << "]:";
    for (GraphLabel g :
         {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset, GraphLabel::all})
        std::cout << " " << graph_label_name(g) << "=" << graphs.get(g).edges.size();
    std::cout << " (papers missing from index: " << graphs.coverage.papers_missing << ")\n";
    return 0;
}

int cmd_index(const Options& o) {
    Config cfg = effective_config(o);
    fs::path corpus_path = ws(o) / "corpus.jsonl";
    require_output(corpus_path, "dedup");
    if (!o.vectors.empty()) cfg.set("index.vectors", o.vectors);

    std::vector<fs::path> inputs = {corpus_path};
    if (!o.vectors.empty()) inputs.push_back(o.vectors);
    std::string input_hash = hash_files(inputs);
    std::string config_hash = cfg.content_hash();
    if (stage_current(o, "index", input_hash, config_hash)) return 0;

    SearchPool pool = SearchPool::from_corpus(load_corpus_jsonl(corpus_path));
    HashingEmbedder provider(static_cast<std::size_t>(cfg.get_int("embed.dim", 256)));
    SearchIndexes indexes = build_indexes(pool, provider, cfg.get_double("bm25.k1", 0.9),
                                          cfg.get_double("bm25.b", 0.4));
    if (!o.vectors.empty()) {
        VectorIndex external = load_vector_file(o.vectors);
        if (external.dim == 0) throw DataError("external vector file has dim 0");
        indexes.table_vectors = std::move(external);
    }
    save_term_index(ws(o) / "term_index.bin", indexes.terms);
    save_vector_file(ws(o) / "table_vectors.txt", indexes.table_vectors);
    save_vector_file(ws(o) / "metadata_vectors.txt", indexes.metadata_vectors);

    record_stage(o, "index", input_hash, config_hash,
                 {"term_index.bin", "table_vectors.txt", "metadata_vectors.txt"});
    std::cout << "index: " << pool.entries.size() << " tables, " << indexes.contextless
              << " without metadata context\n";
    return 0;
}

SearchIndexes load_indexes(const Options& o, const SearchPool& pool,
                           const EmbeddingProvider& provider) {
    require_output(ws(o) / "term_index.bin", "index");
    SearchIndexes idx;
    idx.terms = load_term_index(ws(o) / "term_index.bin");
    idx.table_vectors = load_vector_file(ws(o) / "table_vectors.txt");
    idx.metadata_vectors = load_vector_file(ws(o) / "metadata_vectors.txt");
    idx.column_embeddings.resize(pool.entries.size());
    for (std::size_t i = 0; i < pool.entries.size(); ++i) {
        const auto& t = pool.entries[i].table;
        idx.column_embeddings[i].resize(t.n_cols);
        for (std::size_t c = 0; c < t.n_cols; ++c)
            idx.column_embeddings[i][c] = provider.embed(column_text(t, c));
    }
    return idx;
}

int cmd_search(const Options& o) {
    Config cfg = effective_config(o);
    fs::path corpus_path = ws(o) / "corpus.jsonl";
    require_output(corpus_path, "dedup");
    if (o.query.empty()) throw UsageError("search needs --query <table_id>");
    if (o.methods.size() != 1) throw UsageError("search needs exactly one --method");
    auto method = search_method_from_name(o.methods.front());
    if (!method) throw UsageError("unknown --method: " + o.methods.front());

    SearchPool pool = SearchPool::from_corpus(load_corpus_jsonl(corpus_path));
    HashingEmbedder provider(static_cast<std::size_t>(cfg.get_int("embed.dim", 256)));
    SearchIndexes indexes = load_indexes(o, pool, provider);

    const PoolEntry* query = pool.find(o.query);
    if (!query) throw DataError("query table not in corpus: " + o.query);
    std::size_t k = o.k > 0 ? o.k : 10;
    RankedResult r = run_search(*method, *query, pool, indexes, provider, k);
    if (r.flagged) std::cerr << "warning: degenerate query input for this method\n";
    for (std::size_t i = 0; i < r.hits.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", r.hits[i].second);
        std::cout << (i + 1) << "\t" << r.hits[i].first << "\t" << buf << "\n";
    }
    return 0;
}

std::set<SourceKind> parse_subset(const std::string& spec) {
    std::set<SourceKind> subset;
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (part == "M") {
            subset.insert(SourceKind::model_card);
            subset.insert(SourceKind::dataset_card);
        } else if (part == "G") {
            subset.insert(SourceKind::github_readme);
        } else if (part == "A") {
            subset.insert(SourceKind::arxiv_html);
        } else if (part == "SS") {
            subset.insert(SourceKind::s2_text);
        } else if (auto k = source_kind_from_name(part)) {
            subset.insert(*k);
        } else {
            throw UsageError("unknown source in --sources: " + part);
        }
    }
    return subset;
}

int cmd_eval(const Options& o) {
    Config cfg = effective_config(o);
    fs::path corpus_path = ws(o) / "corpus.jsonl";
    require_output(corpus_path, "dedup");
    fs::path edges_path = ws(o) / "edges.tsv";
    require_output(edges_path, "relate");
    require_output(ws(o) / "term_index.bin", "index");

    EvalConfig ec;
    std::vector<std::string> method_names =
        o.methods.empty()
            ? std::vector<std::string>{"keyword", "join", "union", "dense", "sparse", "hybrid"}
            : o.methods;
    for (const auto& m : method_names) {
        auto method = search_method_from_name(m);
        if (!method) throw UsageError("unknown --method: " + m);
        ec.methods.push_back(*method);
    }
    std::vector<std::string> graph_names =
        o.graphs.empty() ? std::vector<std::string>{"paper", "model", "dataset", "all"}
                         : o.graphs;
    for (const auto& g : graph_names) {
        if (g == "paper")
            ec.graphs.push_back(GraphLabel::paper);
        else if (g == "model")
            ec.graphs.push_back(GraphLabel::model);
        else if (g == "dataset")
            ec.graphs.push_back(GraphLabel::dataset);
        else if (g == "all")
            ec.graphs.push_back(GraphLabel::all);
        else
            throw UsageError("unknown --graph: " + g);
    }
    ec.k = o.k > 0 ? o.k : 1;
    auto policy = query_policy_from_name(
        cfg.get("eval.query_policy", "tables_with_positives"));
    if (!policy) throw UsageError("bad eval.query_policy in config");
    ec.query_policy = *policy;
    ec.augmented = o.augmented;
    ec.force_union_transpose = cfg.get_bool("eval.union_transpose", false);
    for (const auto& s : o.sources) ec.source_subsets.push_back(parse_subset(s));

    cfg.set("eval.methods", [&] {
        std::string j;
        for (const auto& m : method_names) j += (j.empty() ? "" : ",") + m;
        return j;
    }());
    cfg.set("eval.graphs", [&] {
        std::string j;
        for (const auto& g : graph_names) j += (j.empty() ? "" : ",") + g;
        return j;
    }());
    cfg.set("eval.k", std::to_string(ec.k));
    cfg.set("eval.augmented", ec.augmented ? "true" : "false");

    auto corpus = load_corpus_jsonl(corpus_path);
    TableGraphs graphs = load_edges_tsv(edges_path);

    SearchPool pool = SearchPool::from_corpus(corpus);
    std::map<std::string, const CorpusRecord*> by_id;
    for (const auto& rec : corpus) by_id[rec.table.table_id] = &rec;
    if (ec.augmented) {
        fs::path aug_path = ws(o) / "augmented.jsonl";
        require_output(aug_path, "augment");
        for (const auto& a : load_augmented_jsonl(aug_path)) {
            auto base = by_id.find(a.base_id);
            if (base == by_id.end()) continue;
            PoolEntry e;
            e.id = variant_pool_id(a.base_id, a.variant);
            e.content_id = content_hash(a.cells, a.header_row_count);
            e.base_id = a.base_id;
            e.table.table_id = e.id;
            e.table.cells = a.cells;
            e.table.header_row_count = a.header_row_count;
            e.table.caption = a.caption;
            e.table.n_rows = a.cells.size();
            e.table.n_cols = a.cells.empty() ? 0 : a.cells.front().size();
            e.context_text = base->second->context_text;
            e.source_kinds = base->second->source_kinds;
            pool.add(std::move(e));
        }
        pool.finalize();
    }

    HashingEmbedder provider(static_cast<std::size_t>(cfg.get_int("embed.dim", 256)));
    // indexes rebuilt over the full pool (the persisted ones cover the bare
    // corpus; the index stage gate above keeps the pipeline order honest)
    SearchIndexes indexes = build_indexes(pool, provider, cfg.get_double("bm25.k1", 0.9),
                                          cfg.get_double("bm25.b", 0.4));

    std::string input_hash = hash_files({corpus_path, edges_path});
    std::string config_hash = cfg.content_hash();

    EvalReport report = run_eval(ec, corpus, graphs, pool, indexes, provider,
                                 hash_file(corpus_path), config_hash, o.seed);
    emit_report(report, ws(o) / "report.jsonl", ws(o) / "report.txt");

    record_stage(o, "eval", input_hash, config_hash, {"report.jsonl", "report.txt"});
    for (const auto& c : report.cells) {
        std::cout << c.method << " @" << c.k << " " << c.graph << "/" << c.subset << ": ";
        if (c.result.precision) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", *c.result.precision);
            std::cout << buf << " (" << c.result.successes << "/" << c.result.queries << ")\n";
        } else {
            std::cout << "null\n";
        }
    }
    return 0;
}

int cmd_stats(const Options& o) {
    fs::path corpus_path = ws(o) / "corpus.jsonl";
    require_output(corpus_path, "dedup");
    fs::path edges_path = ws(o) / "edges.tsv";
    require_output(edges_path, "relate");
    fs::path freq_path = ws(o) / "frequencies.tsv";
    require_output(freq_path, "dedup");

    auto corpus = load_corpus_jsonl(corpus_path);
    TableGraphs graphs = load_edges_tsv(edges_path);
    auto frequencies = load_frequencies_tsv(freq_path);

    std::ostringstream stats;
    stats << "graph\tfilter\tn_tables\tnonzero\tdensity_percent\n";
    std::cout << "graph\tfilter\tn_tables\tnonzero\tdensity_percent\n";
    for (GraphLabel g :
         {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset, GraphLabel::all}) {
        const auto& graph = graphs.get(g);
        DensityStats d = graph_density(graph);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", d.density_percent);
        std::ostringstream row;
        row << graph_label_name(g) << "\t" << graph.filter_desc << "\t" << d.n_tables << "\t"
            << d.ordered_nonzero << "\t" << buf << "\n";
        stats << row.str();
        std::cout << row.str();
    }
    atomic_write(ws(o) / "stats.txt", stats.str());

    // duplicate-frequency histogram: occurrence count -> number of tables
    std::map<std::size_t, std::size_t> freq_hist;
    for (const auto& [id, count] : frequencies) ++freq_hist[count];
    std::ostringstream fh;
    for (const auto& [count, tables] : freq_hist) fh << count << "\t" << tables << "\n";
    atomic_write(ws(o) / "frequency_distribution.tsv", fh.str());

    // per-table positive counts under each graph
    std::vector<std::string> ids;
    for (const auto& rec : corpus) ids.push_back(rec.table.table_id);
    std::ostringstream dd;
    dd << "table_id\tpaper\tmodel\tdataset\tall\n";
    std::map<GraphLabel, std::map<std::string, std::size_t>> degree;
    for (GraphLabel g :
         {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset, GraphLabel::all})
        degree[g] = per_query_positive_counts(graphs.get(g), ids);
    for (const auto& id : ids) {
        dd << id;
        for (GraphLabel g :
             {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset, GraphLabel::all})
            dd << "\t" << degree[g][id];
        dd << "\n";
    }
    atomic_write(ws(o) / "degree_distribution.tsv", dd.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mtab: model-lake table corpus pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    Options o;
    app.add_option("--workspace", o.workspace, "workspace directory")->capture_default_str();
    app.add_option("--config", o.config_path, "flat key=value config file");
    app.add_flag("--force", o.force, "re-run even when the manifest says up to date");
    app.add_option("--seed", o.seed, "seed for stochastic stages")->capture_default_str();

    auto* ingest = app.add_subcommand("ingest", "load a snapshot directory");
    ingest->add_option("--snapshot", o.snapshot, "snapshot root directory");

    app.add_subcommand("extract", "extract tables and links from the snapshot");
    app.add_subcommand("clean", "repair structural defects and filter");
    app.add_subcommand("dedup", "deduplicate by content hash");

    auto* augment = app.add_subcommand("augment", "emit augmented table variants");
    augment->add_option("--variant", o.variants,
                        "transpose|header2cell|shufflecol|shufflerow|dropcell (repeatable)");
    augment->add_option("--drop-rate", o.drop_rate, "blank probability for dropcell");

    auto* relate = app.add_subcommand("relate", "build relatedness ground truth");
    relate->add_option("--relation", o.relation, "direct|overlap")->capture_default_str();
    relate->add_flag("--intent", o.intent, "keep only methodology/result citations");
    relate->add_flag("--influential", o.influential, "keep only influential citations");

    auto* index = app.add_subcommand("index", "build search indices");
    index->add_option("--vectors", o.vectors, "external table-vector file to import");

    auto* search = app.add_subcommand("search", "answer a single table query");
    search->add_option("--query", o.query, "query table_id");
    search->add_option("--method", o.methods,
                       "keyword|join|union|dense|sparse|hybrid");
    search->add_option("--k", o.k, "result count");

    auto* eval = app.add_subcommand("eval", "score methods against ground truth");
    eval->add_option("--method", o.methods, "methods to evaluate (repeatable)");
    eval->add_option("--graph", o.graphs, "paper|model|dataset|all (repeatable)");
    eval->add_option("--k", o.k, "precision cutoff");
    eval->add_option("--sources", o.sources,
                     "source-subset ablation, comma-joined kinds (repeatable)");
    eval->add_flag("--augmented", o.augmented, "any-of-three augmented protocol");

    app.add_subcommand("stats", "density and distribution statistics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        std::filesystem::create_directories(o.workspace);
        WorkspaceLock lock(o.workspace);
        std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "ingest") return cmd_ingest(o);
        if (cmd == "extract") return cmd_extract(o);
        if (cmd == "clean") return cmd_clean(o);
        if (cmd == "dedup") return cmd_dedup(o);
        if (cmd == "augment") return cmd_augment(o);
        if (cmd == "relate") return cmd_relate(o);
        if (cmd == "index") return cmd_index(o);
        if (cmd == "search") return cmd_search(o);
        if (cmd == "eval") return cmd_eval(o);
        if (cmd == "stats") return cmd_stats(o);
        std::cerr << "unknown command\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const MissingStage& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
