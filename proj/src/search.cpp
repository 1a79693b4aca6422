#include "mtab/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mtab/util.hpp"

namespace mtab {

std::vector<float> HashingEmbedder::embed(const std::string& text) const {
    std::vector<float> v(dim_, 0.0f);
    bool any = false;
    for (const auto& tok : tokenize(text)) {
        std::uint64_t h = fnv1a64(tok);
        std::size_t idx = static_cast<std::size_t>(h % dim_);
        float sign = (h >> 63) ? -1.0f : 1.0f;
        v[idx] += sign;
        any = true;
    }
    if (!any) return v;
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm == 0.0) return v;
    float inv = static_cast<float>(1.0 / std::sqrt(norm));
    for (float& x : v) x *= inv;
    return v;
}

double TermIndex::avg_doc_length() const {
    if (doc_lengths.empty()) return 0.0;
    double sum = 0.0;
    for (auto l : doc_lengths) sum += l;
    return sum / static_cast<double>(doc_lengths.size());
}

TermIndex build_term_index(const std::vector<std::pair<std::string, std::string>>& docs,
                           double k1, double b) {
    std::vector<std::pair<std::string, std::string>> sorted = docs;
    std::sort(sorted.begin(), sorted.end());

    TermIndex index;
    index.k1 = k1;
    index.b = b;
    for (std::uint32_t d = 0; d < sorted.size(); ++d) {
        auto tokens = tokenize(sorted[d].second);
        index.doc_ids.push_back(sorted[d].first);
        index.doc_lengths.push_back(static_cast<std::uint32_t>(tokens.size()));
        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf) index.postings[term].push_back({d, count});
    }
    return index;
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_str(std::ofstream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::string read_str(std::ifstream& in) {
    std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

constexpr char kTermIndexMagic[4] = {'M', 'T', 'I', 'X'};
constexpr unsigned char kTermIndexVersion = 1;

}  // namespace

void save_term_index(const std::filesystem::path& path, const TermIndex& index) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write term index: " + path.string());
    out.write(kTermIndexMagic, 4);
    out.put(static_cast<char>(kTermIndexVersion));
    out.write(reinterpret_cast<const char*>(&index.k1), sizeof index.k1);
    out.write(reinterpret_cast<const char*>(&index.b), sizeof index.b);
    write_u64(out, index.doc_ids.size());
    for (const auto& id : index.doc_ids) write_str(out, id);
    for (auto l : index.doc_lengths) write_u32(out, l);
    write_u64(out, index.postings.size());
    for (const auto& [term, posts] : index.postings) {
        write_str(out, term);
        write_u64(out, posts.size());
        for (const auto& p : posts) {
            write_u32(out, p.doc);
            write_u32(out, p.tf);
        }
    }
}

TermIndex load_term_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open term index: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kTermIndexMagic, 4) != 0)
        throw std::runtime_error("bad term index magic: " + path.string());
    int version = in.get();
    if (version != kTermIndexVersion)
        throw std::runtime_error("unsupported term index version");
    TermIndex index;
    in.read(reinterpret_cast<char*>(&index.k1), sizeof index.k1);
    in.read(reinterpret_cast<char*>(&index.b), sizeof index.b);
    std::uint64_t ndocs = read_u64(in);
    index.doc_ids.reserve(ndocs);
    for (std::uint64_t i = 0; i < ndocs; ++i) index.doc_ids.push_back(read_str(in));
    index.doc_lengths.reserve(ndocs);
    for (std::uint64_t i = 0; i < ndocs; ++i) index.doc_lengths.push_back(read_u32(in));
    std::uint64_t nterms = read_u64(in);
    for (std::uint64_t t = 0; t < nterms; ++t) {
        std::string term = read_str(in);
        std::uint64_t nposts = read_u64(in);
        auto& posts = index.postings[term];
        posts.reserve(nposts);
        for (std::uint64_t p = 0; p < nposts; ++p) {
            Posting post;
            post.doc = read_u32(in);
            post.tf = read_u32(in);
            posts.push_back(post);
        }
    }
    return index;
}

VectorIndex build_vector_index(const std::vector<std::pair<std::string, std::string>>& texts,
                               const EmbeddingProvider& provider) {
    std::vector<std::pair<std::string, std::string>> sorted = texts;
    std::sort(sorted.begin(), sorted.end());
    VectorIndex index;
    index.dim = provider.dim();
    index.ids.reserve(sorted.size());
    for (const auto& [id, text] : sorted) index.ids.push_back(id);
    index.data.assign(sorted.size() * index.dim, 0.0f);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(sorted.size()); ++i) {
        auto v = provider.embed(sorted[static_cast<std::size_t>(i)].second);
        std::copy(v.begin(), v.end(),
                  index.data.begin() + static_cast<std::size_t>(i) * index.dim);
    }
    return index;
}

void save_vector_file(const std::filesystem::path& path, const VectorIndex& index) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vector file: " + path.string());
    out << "dim " << index.dim << "\n";
    char buf[64];
    for (std::size_t i = 0; i < index.ids.size(); ++i) {
        out << index.ids[i] << "\t";
        const float* row = index.row(i);
        for (std::size_t d = 0; d < index.dim; ++d) {
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(row[d]));
            if (d) out << ",";
            out << buf;
        }
        out << "\n";
    }
}

VectorIndex load_vector_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vector file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || !starts_with(line, "dim "))
        throw std::runtime_error("bad vector file header: " + path.string());
    VectorIndex index;
    index.dim = static_cast<std::size_t>(std::stoull(line.substr(4)));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) continue;
        index.ids.push_back(line.substr(0, tab));
        std::size_t pos = tab + 1;
        std::size_t count = 0;
        while (pos <= line.size() && count < index.dim) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            index.data.push_back(std::strtof(line.c_str() + pos, nullptr));
            ++count;
            pos = comma + 1;
        }
        while (count++ < index.dim) index.data.push_back(0.0f);
    }
    // the format does not require sorted ids; normalize row order
    std::vector<std::size_t> order(index.ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return index.ids[a] < index.ids[b];
    });
    VectorIndex sorted;
    sorted.dim = index.dim;
    for (std::size_t i : order) {
        sorted.ids.push_back(index.ids[i]);
        sorted.data.insert(sorted.data.end(), index.row(i), index.row(i) + index.dim);
    }
    return sorted;
}

// --- pool -------------------------------------------------------------------

SearchPool SearchPool::from_corpus(const std::vector<CorpusRecord>& corpus) {
    SearchPool pool;
    for (const auto& rec : corpus) {
        PoolEntry e;
        e.id = rec.table.table_id;
        e.content_id = rec.table.table_id;
        e.base_id = rec.table.table_id;
        e.table = rec.table;
        e.context_text = rec.context_text;
        e.source_kinds = rec.source_kinds;
        pool.entries.push_back(std::move(e));
    }
    pool.finalize();
    return pool;
}

void SearchPool::add(PoolEntry entry) { entries.push_back(std::move(entry)); }

void SearchPool::finalize() {
    std::sort(entries.begin(), entries.end(),
              [](const PoolEntry& a, const PoolEntry& b) { return a.id < b.id; });
    by_id.clear();
    for (std::size_t i = 0; i < entries.size(); ++i) by_id[entries[i].id] = i;
}

const PoolEntry* SearchPool::find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &entries[it->second];
}

std::string column_text(const CanonicalTable& t, std::size_t col) {
    std::string out;
    for (std::size_t r = static_cast<std::size_t>(t.header_row_count); r < t.cells.size(); ++r) {
        if (col >= t.cells[r].size()) continue;
        if (!out.empty()) out.push_back(' ');
        out += t.cells[r][col];
    }
    return out;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0;
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) dot += static_cast<double>(a[i]) * b[i];
    return dot;  // inputs are unit or zero vectors
}

SearchIndexes build_indexes(const SearchPool& pool, const EmbeddingProvider& provider,
                            double k1, double b) {
    SearchIndexes idx;
    std::vector<std::pair<std::string, std::string>> contexts;
    std::vector<std::pair<std::string, std::string>> serialized;
    for (const auto& e : pool.entries) {
        serialized.emplace_back(e.id, serialize_table(e.table));
        if (e.context_text.empty()) {
            ++idx.contextless;
        } else {
            contexts.emplace_back(e.id, e.context_text);
        }
    }
    idx.terms = build_term_index(contexts, k1, b);
    idx.table_vectors = build_vector_index(serialized, provider);
    idx.metadata_vectors = build_vector_index(contexts, provider);

    idx.column_embeddings.resize(pool.entries.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(pool.entries.size()); ++i) {
        const auto& t = pool.entries[static_cast<std::size_t>(i)].table;
        auto& cols = idx.column_embeddings[static_cast<std::size_t>(i)];
        cols.resize(t.n_cols);
        for (std::size_t c = 0; c < t.n_cols; ++c) cols[c] = provider.embed(column_text(t, c));
    }
    return idx;
}

namespace {

RankedResult rank_and_trim(std::string query_id,
                           std::vector<std::pair<std::string, double>> scored, std::size_t k) {
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > k) scored.resize(k);
    RankedResult r;
    r.query_id = std::move(query_id);
    r.hits = std::move(scored);
    return r;
}

bool is_zero(const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
}

}  // namespace

RankedResult keyword_search(const PoolEntry& query, const SearchPool& pool, std::size_t k) {
    QueryExclusion exclude{query.id, query.content_id};
    bool flagged = false;
    std::vector<std::string> token_source;
    if (query.table.header_row_count >= 1) {
        for (int r = 0; r < query.table.header_row_count; ++r)
            for (const auto& cell : query.table.cells[static_cast<std::size_t>(r)])
                token_source.push_back(cell);
    } else if (!query.table.cells.empty()) {
        flagged = true;  // headerless: first-row fallback
        for (const auto& cell : query.table.cells.front()) token_source.push_back(cell);
    }
    std::vector<std::string> tokens;
    for (const auto& cell : token_source)
        for (auto& t : tokenize(cell))
            if (std::find(tokens.begin(), tokens.end(), t) == tokens.end())
                tokens.push_back(std::move(t));

    std::vector<std::pair<std::string, double>> scored;
    for (const auto& cand : pool.entries) {
        if (exclude.excluded(cand)) continue;
        std::string content = to_lower(serialize_table(cand.table));
        std::size_t hits = 0;
        for (const auto& t : tokens)
            if (content.find(t) != std::string::npos) ++hits;
        if (hits > 0) scored.emplace_back(cand.id, static_cast<double>(hits));
    }
    auto result = rank_and_trim(query.id, std::move(scored), k);
    result.flagged = flagged;
    return result;
}

namespace {

std::set<std::string> column_value_set(const CanonicalTable& t, std::size_t col) {
    std::set<std::string> values;
    for (std::size_t r = static_cast<std::size_t>(t.header_row_count); r < t.cells.size(); ++r) {
        if (col >= t.cells[r].size()) continue;
        std::string v = to_lower(trim(t.cells[r][col]));
        if (!v.empty()) values.insert(std::move(v));
    }
    return values;
}

}  // namespace

RankedResult join_search(const PoolEntry& query, const SearchPool& pool, std::size_t k) {
    QueryExclusion exclude{query.id, query.content_id};
    RankedResult empty;
    empty.query_id = query.id;
    if (query.table.n_cols == 0) {
        empty.flagged = true;
        return empty;
    }
    std::set<std::string> keys = column_value_set(query.table, query.table.n_cols - 1);
    if (keys.empty()) {
        empty.flagged = true;  // right-most column all empty
        return empty;
    }

    std::vector<std::pair<std::string, double>> scored;
    for (const auto& cand : pool.entries) {
        if (exclude.excluded(cand)) continue;
        std::size_t best = 0;
        for (std::size_t c = 0; c < cand.table.n_cols; ++c) {
            auto values = column_value_set(cand.table, c);
            std::size_t overlap = 0;
            for (const auto& key : keys)
                if (values.count(key)) ++overlap;
            best = std::max(best, overlap);
        }
        if (best > 0) scored.emplace_back(cand.id, static_cast<double>(best));
    }
    return rank_and_trim(query.id, std::move(scored), k);
}

namespace {

double union_score(const std::vector<std::vector<float>>& qcols,
                   const std::vector<std::vector<float>>& ccols) {
    struct Pair {
        double sim;
        std::size_t qi, ci;
    };
    std::vector<Pair> pairs;
    for (std::size_t qi = 0; qi < qcols.size(); ++qi) {
        if (is_zero(qcols[qi])) continue;  // zero-vector columns stay unmatched
        for (std::size_t ci = 0; ci < ccols.size(); ++ci) {
            if (is_zero(ccols[ci])) continue;
            double sim = cosine(qcols[qi], ccols[ci]);
            if (sim > 0.0) pairs.push_back({sim, qi, ci});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.qi != b.qi) return a.qi < b.qi;
        return a.ci < b.ci;
    });
    std::vector<bool> q_used(qcols.size(), false), c_used(ccols.size(), false);
    double sum = 0.0;
    std::size_t matched = 0;
    for (const auto& p : pairs) {
        if (q_used[p.qi] || c_used[p.ci]) continue;
        q_used[p.qi] = true;
        c_used[p.ci] = true;
        sum += p.sim;
        ++matched;
    }
    std::size_t denom = std::max(qcols.size(), ccols.size());
    if (matched == 0 || denom == 0) return 0.0;
    double mean = sum / static_cast<double>(matched);
    return mean * (static_cast<double>(matched) / static_cast<double>(denom));
}

}  // namespace

RankedResult union_search(const PoolEntry& query, const SearchPool& pool,
                          const SearchIndexes& indexes, const EmbeddingProvider& provider,
                          std::size_t k) {
    QueryExclusion exclude{query.id, query.content_id};
    std::vector<std::vector<float>> qcols(query.table.n_cols);
    for (std::size_t c = 0; c < query.table.n_cols; ++c)
        qcols[c] = provider.embed(column_text(query.table, c));

    std::vector<std::pair<std::string, double>> scored;
    for (std::size_t i = 0; i < pool.entries.size(); ++i) {
        const auto& cand = pool.entries[i];
        if (exclude.excluded(cand)) continue;
        scored.emplace_back(cand.id, union_score(qcols, indexes.column_embeddings[i]));
    }
    return rank_and_trim(query.id, std::move(scored), k);
}

RankedResult sparse_search(const std::string& query_context, const TermIndex& index,
                           std::size_t k, const QueryExclusion& exclude,
                           const SearchPool& pool) {
    RankedResult empty;
    std::vector<std::string> terms;
    for (auto& t : tokenize(query_context)) {
        if (std::find(terms.begin(), terms.end(), t) == terms.end())
            terms.push_back(std::move(t));
        if (terms.size() >= kSparseQueryTermLimit) break;
    }
    if (terms.empty()) return empty;

    const double n_docs = static_cast<double>(index.doc_ids.size());
    const double avg_len = index.avg_doc_length();
    std::map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        double df = static_cast<double>(it->second.size());
        double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        for (const auto& p : it->second) {
            double tf = static_cast<double>(p.tf);
            double len = static_cast<double>(index.doc_lengths[p.doc]);
            double norm = index.k1 * (1.0 - index.b + index.b * (avg_len > 0 ? len / avg_len : 0));
            scores[p.doc] += idf * tf * (index.k1 + 1.0) / (tf + norm);
        }
    }
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [doc, score] : scores) {
        const std::string& id = index.doc_ids[doc];
        if (const PoolEntry* e = pool.find(id); e && exclude.excluded(*e)) continue;
        scored.emplace_back(id, score);
    }
    return rank_and_trim("", std::move(scored), k);
}

RankedResult dense_search(const PoolEntry& query, const SearchPool& pool,
                          const VectorIndex& index, const EmbeddingProvider& provider,
                          std::size_t k) {
    QueryExclusion exclude{query.id, query.content_id};
    std::vector<float> qv = provider.embed(serialize_table(query.table));
    RankedResult result;
    result.query_id = query.id;
    if (is_zero(qv)) {
        result.flagged = true;
        return result;
    }
    std::vector<double> sims(index.ids.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(index.ids.size()); ++i) {
        const float* row = index.row(static_cast<std::size_t>(i));
        double dot = 0.0;
        for (std::size_t d = 0; d < index.dim; ++d)
            dot += static_cast<double>(qv[d]) * row[d];
        sims[static_cast<std::size_t>(i)] = dot;
    }
    std::vector<std::pair<std::string, double>> scored;
    for (std::size_t i = 0; i < index.ids.size(); ++i) {
        if (const PoolEntry* e = pool.find(index.ids[i]); e && exclude.excluded(*e)) continue;
        scored.emplace_back(index.ids[i], sims[i]);
    }
    auto out = rank_and_trim(query.id, std::move(scored), k);
    return out;
}

RankedResult hybrid_search(const std::string& query_context, const PoolEntry& query,
                           const SearchPool& pool, const SearchIndexes& indexes,
                           const EmbeddingProvider& provider, std::size_t k) {
    QueryExclusion exclude{query.id, query.content_id};
    RankedResult sparse =
        sparse_search(query_context, indexes.terms, kHybridCandidates, exclude, pool);
    RankedResult result;
    result.query_id = query.id;
    if (sparse.hits.empty()) return result;

    std::vector<float> qv = provider.embed(query_context);
    std::map<std::string, std::size_t> meta_row;
    for (std::size_t i = 0; i < indexes.metadata_vectors.ids.size(); ++i)
        meta_row[indexes.metadata_vectors.ids[i]] = i;

    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [id, sparse_score] : sparse.hits) {
        double sim = 0.0;
        if (auto it = meta_row.find(id); it != meta_row.end()) {
            const float* row = indexes.metadata_vectors.row(it->second);
            for (std::size_t d = 0; d < indexes.metadata_vectors.dim; ++d)
                sim += static_cast<double>(qv[d]) * row[d];
        }
        scored.emplace_back(id, sim);
    }
    return rank_and_trim(query.id, std::move(scored), k);
}

const char* search_method_name(SearchMethod m) {
    switch (m) {
        case SearchMethod::keyword: return "keyword";
        case SearchMethod::join: return "join";
        case SearchMethod::union_: return "union";
        case SearchMethod::dense: return "dense";
        case SearchMethod::sparse: return "sparse";
        case SearchMethod::hybrid: return "hybrid";
    }
    return "keyword";
}

std::optional<SearchMethod> search_method_from_name(const std::string& name) {
    if (name == "keyword") return SearchMethod::keyword;
    if (name == "join") return SearchMethod::join;
    if (name == "union") return SearchMethod::union_;
    if (name == "dense") return SearchMethod::dense;
    if (name == "sparse") return SearchMethod::sparse;
    if (name == "hybrid") return SearchMethod::hybrid;
    return std::nullopt;
}

RankedResult run_search(SearchMethod method, const PoolEntry& query, const SearchPool& pool,
                        const SearchIndexes& indexes, const EmbeddingProvider& provider,
                        std::size_t k) {
    switch (method) {
        case SearchMethod::keyword: return keyword_search(query, pool, k);
        case SearchMethod::join: return join_search(query, pool, k);
        case SearchMethod::union_:
            return union_search(query, pool, indexes, provider, k);
        case SearchMethod::dense:
            return dense_search(query, pool, indexes.table_vectors, provider, k);
        case SearchMethod::sparse: {
            QueryExclusion exclude{query.id, query.content_id};
            RankedResult r =
                sparse_search(query.context_text, indexes.terms, k, exclude, pool);
            r.query_id = query.id;
            return r;
        }
        case SearchMethod::hybrid:
            return hybrid_search(query.context_text, query, pool, indexes, provider, k);
    }
    return {};
}

}  // namespace mtab
