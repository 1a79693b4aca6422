#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "mtab/relate.hpp"
#include "mtab/util.hpp"
#include "support/reference.hpp"

using namespace mtab;
namespace fs = std::filesystem;

static fs::path fixture_snapshot() {
    const char* env = std::getenv("MTAB_FIXTURES");
    REQUIRE(env != nullptr);
    return fs::path(env) / "snapshot";
}

static PaperReference ref(std::string id, std::set<CitationIntent> intents, bool infl) {
    PaperReference r;
    r.cited_id = std::move(id);
    r.intents = std::move(intents);
    r.is_influential = infl;
    return r;
}

TEST_CASE("filter_references applies intent and influential requirements") {
    std::vector<PaperReference> refs = {
        ref("p1", {CitationIntent::methodology}, true),
        ref("p2", {CitationIntent::background}, true),
        ref("p3", {CitationIntent::result}, false),
        ref("p4", {}, false),
        ref("", {CitationIntent::methodology}, true),  // empty id always dropped
    };

    CitationFilter none;  // no requirements
    CHECK(filter_references(refs, none) == std::set<std::string>{"p1", "p2", "p3", "p4"});

    CitationFilter intent;
    intent.require_intent = true;
    CHECK(filter_references(refs, intent) == std::set<std::string>{"p1", "p3"});

    CitationFilter infl;
    infl.require_influential = true;
    CHECK(filter_references(refs, infl) == std::set<std::string>{"p1", "p2"});

    CitationFilter both;
    both.require_intent = true;
    both.require_influential = true;
    CHECK(filter_references(refs, both) == std::set<std::string>{"p1"});
}

TEST_CASE("CitationFilter::describe") {
    CitationFilter f;
    CHECK(f.describe() == "direct");
    f.relation = RelationType::overlap;
    CHECK(f.describe() == "overlap");
    f.require_intent = true;
    CHECK(f.describe() == "overlap+intent");
    f.require_influential = true;
    CHECK(f.describe() == "overlap+intent+influential");
    f.require_intent = false;
    CHECK(f.describe() == "overlap+influential");
}

static CitationIndex tiny_index() {
    CitationIndex idx;
    PaperRecord a;
    a.paper_id = "A";
    a.references = {ref("C", {CitationIntent::methodology}, true),
                    ref("B", {CitationIntent::background}, false)};
    PaperRecord b;
    b.paper_id = "B";
    b.references = {ref("C", {CitationIntent::result}, false)};
    PaperRecord c;
    c.paper_id = "C";
    PaperRecord d;
    d.paper_id = "D";
    d.references = {ref("E", {CitationIntent::background}, false)};
    idx["A"] = a;
    idx["B"] = b;
    idx["C"] = c;
    idx["D"] = d;
    return idx;
}

TEST_CASE("papers_related: direct and overlap") {
    CitationIndex idx = tiny_index();

    CitationFilter direct;
    CHECK(papers_related("A", "B", idx, direct));   // A cites B
    CHECK(papers_related("B", "A", idx, direct));   // symmetric
    CHECK(papers_related("A", "C", idx, direct));   // A cites C
    CHECK_FALSE(papers_related("A", "D", idx, direct));
    CHECK_FALSE(papers_related("A", "A", idx, direct));  // self never direct

    CitationFilter overlap;
    overlap.relation = RelationType::overlap;
    CHECK(papers_related("A", "B", idx, overlap));       // both cite C
    CHECK_FALSE(papers_related("A", "D", idx, overlap)); // no shared reference
    // self-pair: overlap holds when the filtered reference set is non-empty
    CHECK(papers_related("A", "A", idx, overlap));
    CHECK_FALSE(papers_related("C", "C", idx, overlap));  // C cites nothing

    // intent requirement removes B's only reference (result survives, so it
    // stays; influential removes it)
    CitationFilter strict = overlap;
    strict.require_influential = true;
    CHECK_FALSE(papers_related("A", "B", idx, strict));  // B->C not influential

    // unknown papers are never related, and coverage records the miss
    CoverageReport cov;
    CHECK_FALSE(papers_related("A", "Z", idx, direct, &cov));
    CHECK(cov.papers_missing == 1);
    CHECK(cov.papers_found == 1);
}

TEST_CASE("models_related levels") {
    ModelRecord m1{"org/m1", {"A"}, {}, {}, {"squad"}};
    ModelRecord m2{"org/m2", {"B"}, {}, {}, {"glue"}};
    ModelRecord m3{"org/m3", {}, {"org/m1"}, {}, {}};
    ModelRecord m4{"org/m4", {}, {}, {"org/m1"}, {}};
    ModelRecord m5{"org/m5", {}, {}, {"org/m1"}, {"squad"}};
    ModelRecord m6{"org/m6", {"D"}, {}, {}, {}};

    CitationIndex idx = tiny_index();
    CitationFilter direct;

    CHECK(models_related_paper(m1, m2, idx, direct));     // A cites B
    CHECK_FALSE(models_related_paper(m1, m6, idx, direct));
    CHECK_FALSE(models_related_paper(m3, m4, idx, direct));  // no papers at all

    CHECK(models_related_card(m1, m1));  // self
    CHECK(models_related_card(m1, m3));  // m3 links to m1
    CHECK(models_related_card(m1, m4));  // m4 derives from m1
    CHECK(models_related_card(m4, m5));  // shared base model
    CHECK_FALSE(models_related_card(m1, m2));

    CHECK(models_related_dataset(m1, m5));  // both on squad
    CHECK_FALSE(models_related_dataset(m1, m2));
    CHECK_FALSE(models_related_dataset(m3, m4));  // no datasets
}

static std::vector<TableModels> star_tables() {
    // t0 belongs to hub; t1..t3 to satellites linked only through the hub
    return {{"t0", {"hub"}}, {"t1", {"s1"}}, {"t2", {"s2"}}, {"t3", {"s3"}}};
}

TEST_CASE("build_table_graphs expands model relations to table edges") {
    std::vector<ModelRecord> models = {
        {"hub", {}, {}, {}, {}},
        {"s1", {}, {"hub"}, {}, {}},
        {"s2", {}, {}, {"hub"}, {}},
        {"s3", {}, {}, {}, {}},
    };
    CitationIndex papers;
    CitationFilter f;
    TableGraphs g = build_table_graphs(star_tables(), models, papers, f);

    CHECK(g.model.n_tables == 4);
    CHECK(g.model.related("t0", "t1"));
    CHECK(g.model.related("t0", "t2"));
    CHECK_FALSE(g.model.related("t0", "t3"));
    CHECK_FALSE(g.model.related("t1", "t2"));
    CHECK_FALSE(g.model.related("t0", "t0"));  // no self loops
    CHECK(g.paper.edges.empty());
    CHECK(g.dataset.edges.empty());
    CHECK(g.all.edges == g.model.edges);  // union of the three levels

    // tables sharing a model id are always model-related
    std::vector<TableModels> shared = {{"ta", {"m"}}, {"tb", {"m"}}};
    TableGraphs g2 = build_table_graphs(shared, {{"m", {}, {}, {}, {}}}, papers, f);
    CHECK(g2.model.related("ta", "tb"));

    // a model id with no record still relates to itself and nothing else
    std::vector<TableModels> ghost = {{"ta", {"ghost"}}, {"tb", {"ghost"}}, {"tc", {"other"}}};
    TableGraphs g3 = build_table_graphs(ghost, {}, papers, f);
    CHECK(g3.model.related("ta", "tb"));
    CHECK_FALSE(g3.model.related("ta", "tc"));
}

TEST_CASE("build_table_graphs matches the brute-force oracle on random worlds") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull, 6ull}) {
        SplitMix64 rng(seed);
        refimpl::RandomWorld world = refimpl::random_world(rng);
        for (bool overlap : {false, true}) {
            for (bool intent : {false, true}) {
                for (bool infl : {false, true}) {
                    CitationFilter f;
                    f.relation = overlap ? RelationType::overlap : RelationType::direct;
                    f.require_intent = intent;
                    f.require_influential = infl;
                    TableGraphs fast = build_table_graphs(world.tables, world.models,
                                                          world.papers, f);
                    refimpl::BruteForceGraphs slow = refimpl::build_graphs_bruteforce(
                        world.tables, world.models, world.papers, f);
                    CHECK(fast.paper.edges == slow.paper);
                    CHECK(fast.model.edges == slow.model);
                    CHECK(fast.dataset.edges == slow.dataset);
                    CHECK(fast.all.edges == slow.all);
                }
            }
        }
    }
}

TEST_CASE("edge sets are canonical: a < b, sorted, unique") {
    SplitMix64 rng(11);
    refimpl::RandomWorld world = refimpl::random_world(rng);
    CitationFilter f;
    f.relation = RelationType::overlap;
    TableGraphs g = build_table_graphs(world.tables, world.models, world.papers, f);
    for (GraphLabel lbl : {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset,
                           GraphLabel::all}) {
        const EdgeSet& edges = g.get(lbl).edges;
        CHECK(std::is_sorted(edges.begin(), edges.end()));
        CHECK(std::adjacent_find(edges.begin(), edges.end()) == edges.end());
        for (const auto& [a, b] : edges) CHECK(a < b);
    }
}

TEST_CASE("strengthening the citation filter never adds paper edges") {
    for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
        SplitMix64 rng(seed);
        refimpl::RandomWorld world = refimpl::random_world(rng);
        for (RelationType rel : {RelationType::direct, RelationType::overlap}) {
            CitationFilter loose;
            loose.relation = rel;
            TableGraphs base = build_table_graphs(world.tables, world.models, world.papers,
                                                  loose);
            for (bool intent : {false, true}) {
                for (bool infl : {false, true}) {
                    if (!intent && !infl) continue;
                    CitationFilter tight = loose;
                    tight.require_intent = intent;
                    tight.require_influential = infl;
                    TableGraphs strict = build_table_graphs(world.tables, world.models,
                                                            world.papers, tight);
                    CHECK(std::includes(base.paper.edges.begin(), base.paper.edges.end(),
                                        strict.paper.edges.begin(), strict.paper.edges.end()));
                }
            }
        }
    }
}

TEST_CASE("graph_density") {
    RelatednessGraph g;
    g.n_tables = 4;
    g.edges = {{"a", "b"}, {"c", "d"}};
    DensityStats s = graph_density(g);
    CHECK(s.ordered_nonzero == 4);
    CHECK(s.density_percent == doctest::Approx(100.0 * 4.0 / 12.0));
    CHECK(s.density_percent == doctest::Approx(refimpl::density_bruteforce(4, 2)));

    // complete graph on 4 nodes
    RelatednessGraph k4;
    k4.n_tables = 4;
    k4.edges = {{"a", "b"}, {"a", "c"}, {"a", "d"}, {"b", "c"}, {"b", "d"}, {"c", "d"}};
    CHECK(graph_density(k4).density_percent == doctest::Approx(100.0));

    RelatednessGraph empty;
    empty.n_tables = 1;
    CHECK(graph_density(empty).density_percent == 0.0);
    empty.n_tables = 0;
    CHECK(graph_density(empty).density_percent == 0.0);
}

TEST_CASE("per_query_positive_counts") {
    RelatednessGraph g;
    g.n_tables = 4;
    g.edges = {{"t0", "t1"}, {"t0", "t2"}};
    auto counts = per_query_positive_counts(g, {"t0", "t1", "t2", "t3"});
    CHECK(counts.at("t0") == 2);
    CHECK(counts.at("t1") == 1);
    CHECK(counts.at("t2") == 1);
    CHECK(counts.at("t3") == 0);
}

TEST_CASE("|all| is bounded by its components") {
    SplitMix64 rng(31);
    refimpl::RandomWorld world = refimpl::random_world(rng);
    CitationFilter f;
    f.relation = RelationType::overlap;
    TableGraphs g = build_table_graphs(world.tables, world.models, world.papers, f);
    std::size_t biggest = std::max({g.paper.edges.size(), g.model.edges.size(),
                                    g.dataset.edges.size()});
    CHECK(g.all.edges.size() >= biggest);
    CHECK(g.all.edges.size() <=
          g.paper.edges.size() + g.model.edges.size() + g.dataset.edges.size());
}

TEST_CASE("persistence round trips") {
    fs::path dir = fs::temp_directory_path() / "mtab_relate_io";
    fs::create_directories(dir);

    CitationIndex idx = load_papers_jsonl(fixture_snapshot() / "meta" / "papers.jsonl");
    CHECK(idx.size() == 6);
    CHECK(idx.at("1810.04805").references.size() == 2);
    CHECK(idx.at("1810.04805").references[0].is_influential);
    CHECK(idx.at("1810.04805").references[0].intents.count(CitationIntent::methodology) == 1);

    std::vector<ModelRecord> models = {
        {"org/a", {"A", "B"}, {"org/b"}, {}, {"squad"}},
        {"org/b", {}, {}, {"org/a"}, {}},
    };
    save_models_jsonl(dir / "models.jsonl", models);
    auto loaded = load_models_jsonl(dir / "models.jsonl");
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].model_id == "org/a");
    CHECK(loaded[0].papers == std::set<std::string>{"A", "B"});
    CHECK(loaded[0].linked_models == std::set<std::string>{"org/b"});
    CHECK(loaded[1].base_models == std::set<std::string>{"org/a"});
    CHECK(loaded[0].datasets == std::set<std::string>{"squad"});

    SplitMix64 rng(41);
    refimpl::RandomWorld world = refimpl::random_world(rng);
    CitationFilter f;
    f.relation = RelationType::overlap;
    f.require_intent = true;
    TableGraphs g = build_table_graphs(world.tables, world.models, world.papers, f);
    save_edges_tsv(dir / "edges.tsv", g);
    TableGraphs back = load_edges_tsv(dir / "edges.tsv");
    CHECK(back.paper.edges == g.paper.edges);
    CHECK(back.model.edges == g.model.edges);
    CHECK(back.dataset.edges == g.dataset.edges);
    CHECK(back.all.edges == g.all.edges);
    CHECK(back.paper.n_tables == g.paper.n_tables);
    CHECK(back.paper.filter_desc == "overlap+intent");

    fs::remove_all(dir);
}
