// Compares the parallel kernels against the serial reference implementations
// used by the tests: ground-truth construction (model-pair loop) and dense
// vector scan.

#include <chrono>
#include <cstdio>

#include "mtab/relate.hpp"
#include "mtab/search.hpp"
#include "mtab/util.hpp"
#include "support/reference.hpp"

using namespace mtab;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int main(int argc, char** argv) {
    std::size_t n_models = 120, n_papers = 150, n_tables = 400;
    if (argc > 1) n_tables = static_cast<std::size_t>(std::stoul(argv[1]));

    SplitMix64 rng(7);
    auto world = refimpl::random_world(rng, n_models, n_papers, n_tables);
    CitationFilter filter;
    filter.relation = RelationType::overlap;

    auto t0 = Clock::now();
    TableGraphs graphs = build_table_graphs(world.tables, world.models, world.papers, filter);
    double parallel_ms = ms_since(t0);

    t0 = Clock::now();
    auto brute = refimpl::build_graphs_bruteforce(world.tables, world.models, world.papers,
                                                  filter);
    double serial_ms = ms_since(t0);

    bool same = graphs.get(GraphLabel::all).edges == brute.all &&
                graphs.get(GraphLabel::paper).edges == brute.paper;
    std::printf("ground truth  (%zu tables, %zu models): parallel %.1f ms, serial %.1f ms, "
                "speedup %.2fx, identical=%s\n",
                n_tables, n_models, parallel_ms, serial_ms,
                parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, same ? "yes" : "NO");

    // dense scan
    SearchPool pool;
    SplitMix64 trng(11);
    for (std::size_t i = 0; i < n_tables; ++i) {
        PoolEntry e;
        e.table = refimpl::random_table(trng, 8, 6);
        char buf[16];
        std::snprintf(buf, sizeof buf, "t%05zu", i);
        e.table.table_id = buf;
        e.id = e.base_id = buf;
        e.content_id = content_hash(e.table.cells, e.table.header_row_count);
        pool.add(std::move(e));
    }
    pool.finalize();
    HashingEmbedder provider;

    t0 = Clock::now();
    SearchIndexes indexes = build_indexes(pool, provider);
    double index_ms = ms_since(t0);

    const PoolEntry& query = pool.entries.front();
    t0 = Clock::now();
    RankedResult fast = dense_search(query, pool, indexes.table_vectors, provider, 10);
    double fast_ms = ms_since(t0);

    t0 = Clock::now();
    auto slow = refimpl::rank_dense(query, pool, provider);
    double slow_ms = ms_since(t0);

    bool dense_same = !fast.hits.empty() && !slow.empty() &&
                      fast.hits.front().first == slow.front().first;
    std::printf("dense scan    (%zu tables): index %.1f ms, indexed query %.2f ms, "
                "per-query re-embed %.1f ms, top-1 identical=%s\n",
                n_tables, index_ms, fast_ms, slow_ms, dense_same ? "yes" : "NO");
    return same && dense_same ? 0 : 1;
}
