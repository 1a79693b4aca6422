#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtab/eval.hpp"
#include "mtab/util.hpp"
#include "support/reference.hpp"

using namespace mtab;
namespace fs = std::filesystem;

static CanonicalTable canon(Grid cells, int hrc, const std::string& caption = "") {
    CanonicalTable t;
    t.cells = std::move(cells);
    t.header_row_count = hrc;
    t.caption = caption;
    t.n_rows = t.cells.size();
    t.n_cols = t.cells.empty() ? 0 : t.cells.front().size();
    t.table_id = content_hash(t.cells, hrc);
    return t;
}

static PoolEntry entry(const std::string& id, CanonicalTable t, std::string context = "",
                       std::string base = "") {
    PoolEntry e;
    e.id = id;
    e.content_id = content_hash(t.cells, t.header_row_count);
    e.base_id = base.empty() ? id : base;
    e.table = std::move(t);
    e.context_text = std::move(context);
    return e;
}

static RelatednessGraph graph_of(EdgeSet edges, std::size_t n) {
    RelatednessGraph g;
    g.n_tables = n;
    std::sort(edges.begin(), edges.end());
    g.edges = std::move(edges);
    return g;
}

TEST_CASE("topk_success maps hits through base ids") {
    SearchPool pool;
    pool.add(entry("t1", canon({{"a", "b"}}, 0)));
    pool.add(entry("t2", canon({{"c", "d"}}, 0)));
    pool.add(entry("t2#transpose", canon({{"c"}, {"d"}}, 0), "", "t2"));
    pool.finalize();
    RelatednessGraph g = graph_of({{"t1", "t2"}}, 2);

    RankedResult r;
    r.hits = {{"t2", 1.0}};
    CHECK(topk_success(r, "t1", g, pool, 1));

    // an augmented hit counts through its base id
    RankedResult ra;
    ra.hits = {{"t2#transpose", 1.0}};
    CHECK(topk_success(ra, "t1", g, pool, 1));
    // ... but a hit whose base is the query itself never counts
    CHECK_FALSE(topk_success(ra, "t2", g, pool, 1));

    // k cuts the window
    RankedResult deep;
    deep.hits = {{"t1", 2.0}, {"t2", 1.0}};
    CHECK_FALSE(topk_success(deep, "t1", g, pool, 1));
    CHECK(topk_success(deep, "t1", g, pool, 2));

    RankedResult none;
    CHECK_FALSE(topk_success(none, "t1", g, pool, 5));
}

// Pool of two mutually related permuted twins plus one isolated table. Dense
// search sends each twin to the other, so P@1 is exactly 2/3 under the
// all-tables policy and 1 under tables-with-positives.
static SearchPool twin_pool() {
    SearchPool pool;
    pool.add(entry("tA1", canon({{"alpha", "beta"}, {"gamma", "delta"}}, 0)));
    pool.add(entry("tA2", canon({{"gamma", "delta"}, {"alpha", "beta"}}, 0)));
    pool.add(entry("tB", canon({{"unrelated", "words"}, {"entirely", "other"}}, 0)));
    pool.finalize();
    return pool;
}

TEST_CASE("precision_at_k arithmetic and query policies") {
    HashingEmbedder emb(128);
    SearchPool pool = twin_pool();
    SearchIndexes idx = build_indexes(pool, emb);
    RelatednessGraph g = graph_of({{"tA1", "tA2"}}, 3);

    auto all = precision_at_k(SearchMethod::dense, g, pool, idx, emb, 1,
                              QueryPolicy::all_tables);
    CHECK(all.queries == 3);
    CHECK(all.successes == 2);
    REQUIRE(all.precision.has_value());
    CHECK(*all.precision == doctest::Approx(2.0 / 3.0));

    auto pos = precision_at_k(SearchMethod::dense, g, pool, idx, emb, 1,
                              QueryPolicy::tables_with_positives);
    CHECK(pos.queries == 2);
    CHECK(pos.successes == 2);
    CHECK(*pos.precision == doctest::Approx(1.0));

    // empty graph: the positives policy leaves no queries -> null precision
    RelatednessGraph empty = graph_of({}, 3);
    auto none = precision_at_k(SearchMethod::dense, empty, pool, idx, emb, 1,
                               QueryPolicy::tables_with_positives);
    CHECK(none.queries == 0);
    CHECK_FALSE(none.precision.has_value());
}

TEST_CASE("precision matches the brute-force oracle for all methods") {
    SplitMix64 rng(99);
    HashingEmbedder emb(128);
    SearchPool pool;
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) {
        CanonicalTable t = refimpl::random_table(rng);
        std::string id = "q" + std::to_string(i / 10) + std::to_string(i % 10);
        ids.push_back(id);
        pool.add(entry(id, std::move(t), i % 4 == 0 ? "" : "ctx " + id));
    }
    pool.finalize();
    SearchIndexes idx = build_indexes(pool, emb);

    // ring plus a few chords
    EdgeSet edges;
    for (std::size_t i = 0; i < ids.size(); ++i)
        edges.emplace_back(std::min(ids[i], ids[(i + 1) % ids.size()]),
                           std::max(ids[i], ids[(i + 1) % ids.size()]));
    edges.emplace_back("q00", "q05");
    edges.emplace_back("q03", "q17");
    RelatednessGraph g = graph_of(std::move(edges), ids.size());

    for (auto m : {SearchMethod::keyword, SearchMethod::join, SearchMethod::union_,
                   SearchMethod::dense, SearchMethod::sparse, SearchMethod::hybrid}) {
        for (std::size_t k : {std::size_t{1}, std::size_t{3}}) {
            for (auto policy : {QueryPolicy::all_tables, QueryPolicy::tables_with_positives}) {
                PrecisionResult fast = precision_at_k(m, g, pool, idx, emb, k, policy);
                PrecisionResult slow =
                    refimpl::precision_at_k_bruteforce(m, g, pool, idx, emb, k, policy);
                CHECK(fast.queries == slow.queries);
                CHECK(fast.successes == slow.successes);
                CHECK(fast.precision.has_value() == slow.precision.has_value());
            }
        }
    }
}

TEST_CASE("precision is monotone in k") {
    SplitMix64 rng(101);
    HashingEmbedder emb(64);
    SearchPool pool;
    std::vector<std::string> ids;
    for (int i = 0; i < 15; ++i) {
        std::string id = "m" + std::to_string(i);
        ids.push_back(id);
        pool.add(entry(id, refimpl::random_table(rng), "shared words " + id));
    }
    pool.finalize();
    SearchIndexes idx = build_indexes(pool, emb);
    EdgeSet edges;
    for (std::size_t i = 0; i + 1 < ids.size(); i += 2)
        edges.emplace_back(std::min(ids[i], ids[i + 1]), std::max(ids[i], ids[i + 1]));
    RelatednessGraph g = graph_of(std::move(edges), ids.size());

    for (auto m : {SearchMethod::dense, SearchMethod::sparse, SearchMethod::keyword}) {
        double prev = 0.0;
        for (std::size_t k = 1; k <= 8; ++k) {
            auto r = precision_at_k(m, g, pool, idx, emb, k, QueryPolicy::all_tables);
            REQUIRE(r.precision.has_value());
            CHECK(*r.precision >= prev - 1e-12);
            prev = *r.precision;
        }
    }
}

// Augmented protocol scenario: the base dense query is dragged to an unrelated
// near-duplicate, while its (synthetic) transpose variant points at the
// related table.
TEST_CASE("augmented protocol is a disjunction over base and variant runs") {
    HashingEmbedder emb(128);
    SearchPool pool;
    pool.add(entry("tQ", canon({{"a1 a2 a3", "a4 a5 a6"}}, 0)));
    pool.add(entry("tN", canon({{"a1 a2 a3", "a4 a5 zz"}}, 0)));  // near-dup, unrelated
    pool.add(entry("tR", canon({{"w1 w2 w3", "w4 w5 w6"}}, 0)));  // related, dissimilar
    pool.add(entry("tQ#transpose", canon({{"w1 w2 w3", "w4 w5 qq"}}, 0), "", "tQ"));
    pool.finalize();
    SearchIndexes idx = build_indexes(pool, emb);
    RelatednessGraph g = graph_of({{"tQ", "tR"}}, 3);

    const PoolEntry& q = *pool.find("tQ");

    // the base run fails: tN outranks tR
    RankedResult base = run_search(SearchMethod::dense, q, pool, idx, emb, 1);
    REQUIRE(!base.hits.empty());
    CHECK(base.hits[0].first == "tN");
    CHECK_FALSE(topk_success(base, "tQ", g, pool, 1));

    // the transpose run rescues it
    CHECK(augmented_success(q, SearchMethod::dense, g, pool, idx, emb, 1));

    auto plain = precision_at_k(SearchMethod::dense, g, pool, idx, emb, 1,
                                QueryPolicy::tables_with_positives);
    auto aug = precision_at_k_augmented(SearchMethod::dense, g, pool, idx, emb, 1,
                                        QueryPolicy::tables_with_positives);
    CHECK(plain.queries == aug.queries);
    CHECK(aug.successes > plain.successes);
    // the disjunction can only help
    CHECK(*aug.precision >= *plain.precision);
}

TEST_CASE("union sits out transpose runs unless forced") {
    HashingEmbedder emb(128);
    SearchPool pool;
    pool.add(entry("tQ", canon({{"h1", "h2"}, {"alpha", "beta"}}, 1)));
    pool.add(entry("tN", canon({{"g1", "g2"}, {"alpha", "beta"}}, 1)));  // union twin of tQ
    pool.add(entry("tR", canon({{"f1", "f2"}, {"gamma", "delta"}}, 1)));
    pool.add(entry("tQ#transpose", canon({{"v1", "v2"}, {"gamma", "delta"}}, 1), "", "tQ"));
    pool.finalize();
    SearchIndexes idx = build_indexes(pool, emb);
    RelatednessGraph g = graph_of({{"tQ", "tR"}}, 3);

    const PoolEntry& q = *pool.find("tQ");
    CHECK_FALSE(augmented_success(q, SearchMethod::union_, g, pool, idx, emb, 1, false));
    CHECK(augmented_success(q, SearchMethod::union_, g, pool, idx, emb, 1, true));
}

TEST_CASE("with no variants in the pool the augmented protocol reduces to plain") {
    SplitMix64 rng(103);
    HashingEmbedder emb(64);
    SearchPool pool;
    std::vector<std::string> ids;
    for (int i = 0; i < 12; ++i) {
        std::string id = "n" + std::to_string(i);
        ids.push_back(id);
        pool.add(entry(id, refimpl::random_table(rng), "ctx " + id));
    }
    pool.finalize();
    SearchIndexes idx = build_indexes(pool, emb);
    EdgeSet edges;
    for (std::size_t i = 0; i + 1 < ids.size(); i += 3)
        edges.emplace_back(std::min(ids[i], ids[i + 1]), std::max(ids[i], ids[i + 1]));
    RelatednessGraph g = graph_of(std::move(edges), ids.size());

    for (auto m : {SearchMethod::keyword, SearchMethod::join, SearchMethod::union_,
                   SearchMethod::dense, SearchMethod::sparse, SearchMethod::hybrid}) {
        auto plain = precision_at_k(m, g, pool, idx, emb, 2, QueryPolicy::all_tables);
        auto aug = precision_at_k_augmented(m, g, pool, idx, emb, 2, QueryPolicy::all_tables);
        CHECK(plain.queries == aug.queries);
        CHECK(plain.successes == aug.successes);
    }
}

TEST_CASE("subset_name") {
    CHECK(subset_name({}) == "all");
    CHECK(subset_name({SourceKind::model_card, SourceKind::dataset_card,
                       SourceKind::github_readme, SourceKind::arxiv_html,
                       SourceKind::s2_text}) == "all");
    CHECK(subset_name({SourceKind::model_card}) == "M");
    CHECK(subset_name({SourceKind::dataset_card}) == "M");
    CHECK(subset_name({SourceKind::github_readme}) == "G");
    CHECK(subset_name({SourceKind::arxiv_html}) == "A");
    CHECK(subset_name({SourceKind::s2_text}) == "SS");
    CHECK(subset_name({SourceKind::model_card, SourceKind::github_readme}) == "M+G");
    CHECK(subset_name({SourceKind::arxiv_html, SourceKind::s2_text}) == "A+SS");
}

static std::vector<CorpusRecord> mixed_corpus() {
    auto record = [](const std::string& seed_token, std::vector<SourceKind> kinds) {
        CorpusRecord rec;
        rec.table = canon({{seed_token, "value"}, {seed_token + "x", "1"}}, 1);
        rec.source_kinds = std::move(kinds);
        rec.model_ids = {"org/m"};
        rec.context_text = "context about " + seed_token;
        return rec;
    };
    return {
        record("cardone", {SourceKind::model_card}),
        record("cardtwo", {SourceKind::model_card, SourceKind::arxiv_html}),
        record("paperone", {SourceKind::arxiv_html}),
        record("readmeone", {SourceKind::github_readme}),
    };
}

TEST_CASE("ablate_by_source restricts pool membership by any source kind") {
    HashingEmbedder emb(64);
    auto corpus = mixed_corpus();
    std::vector<std::string> ids;
    for (const auto& r : corpus) ids.push_back(r.table.table_id);
    EdgeSet edges;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
            edges.emplace_back(std::min(ids[i], ids[j]), std::max(ids[i], ids[j]));
    RelatednessGraph g = graph_of(std::move(edges), ids.size());

    // the full subset is identical to the unrestricted evaluation
    SearchPool pool = SearchPool::from_corpus(corpus);
    SearchIndexes idx = build_indexes(pool, emb);
    auto unrestricted = precision_at_k(SearchMethod::sparse, g, pool, idx, emb, 1,
                                       QueryPolicy::all_tables);
    auto full = ablate_by_source(SearchMethod::sparse, g, corpus,
                                 {SourceKind::model_card, SourceKind::dataset_card,
                                  SourceKind::github_readme, SourceKind::arxiv_html,
                                  SourceKind::s2_text},
                                 emb, 1, QueryPolicy::all_tables);
    CHECK(full.queries == unrestricted.queries);
    CHECK(full.successes == unrestricted.successes);

    // arxiv subset keeps cardtwo (mixed sources) and paperone
    auto arxiv = ablate_by_source(SearchMethod::sparse, g, corpus, {SourceKind::arxiv_html},
                                  emb, 1, QueryPolicy::all_tables);
    CHECK(arxiv.queries == 2);

    // a subset matching nothing yields the empty result
    auto empty = ablate_by_source(SearchMethod::sparse, g, corpus, {SourceKind::s2_text},
                                  emb, 1, QueryPolicy::all_tables);
    CHECK(empty.queries == 0);
    CHECK_FALSE(empty.precision.has_value());
}

TEST_CASE("run_eval produces one cell per method x graph x subset") {
    HashingEmbedder emb(64);
    auto corpus = mixed_corpus();
    SearchPool pool = SearchPool::from_corpus(corpus);
    SearchIndexes idx = build_indexes(pool, emb);

    std::vector<TableModels> tm;
    for (const auto& r : corpus) tm.push_back({r.table.table_id, r.model_ids});
    TableGraphs graphs = build_table_graphs(tm, {{"org/m", {}, {}, {}, {}}}, {}, {});

    EvalConfig cfg;
    cfg.methods = {SearchMethod::dense, SearchMethod::sparse};
    cfg.graphs = {GraphLabel::model, GraphLabel::all};
    cfg.k = 1;
    cfg.query_policy = QueryPolicy::all_tables;
    cfg.source_subsets = {{SourceKind::model_card}, {SourceKind::arxiv_html}};

    EvalReport report = run_eval(cfg, corpus, graphs, pool, idx, emb, "corpushash",
                                 "confighash", 7);
    CHECK(report.cells.size() == 2 * 2 * 3);  // unrestricted + two subsets
    CHECK(report.cells[0].subset == "all");
    CHECK(report.cells[1].subset == "M");
    CHECK(report.cells[2].subset == "A");
    for (const auto& c : report.cells) {
        CHECK(c.k == 1);
        CHECK(c.policy == "all_tables");
        CHECK(c.filter == "direct");  // graphs carry the default filter description
    }

    // emit / reload round trip, and emission is byte-stable
    fs::path dir = fs::temp_directory_path() / "mtab_eval_io";
    fs::create_directories(dir);
    emit_report(report, dir / "r1.jsonl", dir / "r1.txt");
    emit_report(report, dir / "r2.jsonl", dir / "r2.txt");
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(dir / "r1.jsonl") == slurp(dir / "r2.jsonl"));
    CHECK(slurp(dir / "r1.txt") == slurp(dir / "r2.txt"));

    EvalReport back = load_report(dir / "r1.jsonl");
    CHECK(back.corpus_hash == "corpushash");
    CHECK(back.config_hash == "confighash");
    CHECK(back.seed == 7);
    REQUIRE(back.cells.size() == report.cells.size());
    for (std::size_t i = 0; i < back.cells.size(); ++i) {
        CHECK(back.cells[i].method == report.cells[i].method);
        CHECK(back.cells[i].graph == report.cells[i].graph);
        CHECK(back.cells[i].subset == report.cells[i].subset);
        CHECK(back.cells[i].result.queries == report.cells[i].result.queries);
        CHECK(back.cells[i].result.successes == report.cells[i].result.successes);
    }

    // an empty report still carries the header record
    EvalReport bare;
    bare.corpus_hash = "c";
    bare.config_hash = "k";
    bare.seed = 1;
    emit_report(bare, dir / "bare.jsonl", dir / "bare.txt");
    std::string text = slurp(dir / "bare.jsonl");
    CHECK(text.find("\"record\":\"header\"") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    fs::remove_all(dir);
}
