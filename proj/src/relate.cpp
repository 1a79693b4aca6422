#include "mtab/relate.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "mtab/util.hpp"

namespace mtab {

const char* citation_intent_name(CitationIntent i) {
    switch (i) {
        case CitationIntent::methodology: return "methodology";
        case CitationIntent::result: return "result";
        case CitationIntent::background: return "background";
        case CitationIntent::other: return "other";
    }
    return "other";
}

CitationIntent citation_intent_from_name(const std::string& name) {
    if (name == "methodology") return CitationIntent::methodology;
    if (name == "result") return CitationIntent::result;
    if (name == "background") return CitationIntent::background;
    return CitationIntent::other;
}

std::string CitationFilter::describe() const {
    std::string s = relation == RelationType::direct ? "direct" : "overlap";
    if (require_intent && require_influential) s += "+intent+influential";
    else if (require_intent) s += "+intent";
    else if (require_influential) s += "+influential";
    return s;
}

std::set<std::string> filter_references(const std::vector<PaperReference>& refs,
                                        const CitationFilter& filter) {
    std::set<std::string> out;
    for (const auto& r : refs) {
        if (r.cited_id.empty()) continue;
        if (filter.require_intent &&
            !r.intents.count(CitationIntent::methodology) &&
            !r.intents.count(CitationIntent::result))
            continue;
        if (filter.require_influential && !r.is_influential) continue;
        out.insert(r.cited_id);
    }
    return out;
}

bool papers_related(const std::string& p_a, const std::string& p_b, const CitationIndex& index,
                    const CitationFilter& filter, CoverageReport* coverage) {
    auto ia = index.find(p_a);
    auto ib = index.find(p_b);
    if (coverage) {
        if (ia == index.end()) ++coverage->papers_missing; else ++coverage->papers_found;
        if (ib == index.end()) ++coverage->papers_missing; else ++coverage->papers_found;
    }
    if (ia == index.end() || ib == index.end()) return false;

    std::set<std::string> refs_a = filter_references(ia->second.references, filter);
    if (p_a == p_b) {
        // a paper does not cite itself; a shared paper relates two models
        // under overlap only when its filtered reference list is non-empty
        return filter.relation == RelationType::overlap && !refs_a.empty();
    }
    std::set<std::string> refs_b = filter_references(ib->second.references, filter);
    if (filter.relation == RelationType::direct)
        return refs_a.count(p_b) > 0 || refs_b.count(p_a) > 0;
    for (const auto& r : refs_a)
        if (refs_b.count(r)) return true;
    return false;
}

bool models_related_paper(const ModelRecord& m_a, const ModelRecord& m_b,
                          const CitationIndex& index, const CitationFilter& filter,
                          CoverageReport* coverage) {
    for (const auto& pa : m_a.papers)
        for (const auto& pb : m_b.papers)
            if (papers_related(pa, pb, index, filter, coverage)) return true;
    return false;
}

bool models_related_card(const ModelRecord& m_a, const ModelRecord& m_b) {
    if (m_a.model_id == m_b.model_id) return true;
    if (m_a.linked_models.count(m_b.model_id) || m_b.linked_models.count(m_a.model_id))
        return true;
    if (m_a.base_models.count(m_b.model_id) || m_b.base_models.count(m_a.model_id)) return true;
    for (const auto& base : m_a.base_models)
        if (m_b.base_models.count(base)) return true;
    return false;
}

bool models_related_dataset(const ModelRecord& m_a, const ModelRecord& m_b) {
    for (const auto& d : m_a.datasets)
        if (m_b.datasets.count(d)) return true;
    return false;
}

const char* graph_label_name(GraphLabel g) {
    switch (g) {
        case GraphLabel::paper: return "paper";
        case GraphLabel::model: return "model";
        case GraphLabel::dataset: return "dataset";
        case GraphLabel::all: return "all";
    }
    return "paper";
}

bool RelatednessGraph::related(const std::string& a, const std::string& b) const {
    if (a == b) return false;
    std::pair<std::string, std::string> key =
        a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    return std::binary_search(edges.begin(), edges.end(), key);
}

const RelatednessGraph& TableGraphs::get(GraphLabel g) const {
    switch (g) {
        case GraphLabel::paper: return paper;
        case GraphLabel::model: return model;
        case GraphLabel::dataset: return dataset;
        case GraphLabel::all: return all;
    }
    return paper;
}

RelatednessGraph& TableGraphs::get_mut(GraphLabel g) {
    return const_cast<RelatednessGraph&>(std::as_const(*this).get(g));
}

TableGraphs build_table_graphs(const std::vector<TableModels>& corpus,
                               const std::vector<ModelRecord>& models,
                               const CitationIndex& papers, const CitationFilter& filter) {
    TableGraphs out;
    std::string desc = filter.describe();
    for (GraphLabel g : {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset,
                         GraphLabel::all}) {
        RelatednessGraph& graph = out.get_mut(g);
        graph.label = g;
        graph.filter_desc = desc;
        graph.n_tables = corpus.size();
    }

    // restrict to models that actually carry tables
    std::set<std::string> used;
    for (const auto& t : corpus)
        for (const auto& m : t.model_ids) used.insert(m);
    std::vector<const ModelRecord*> active;
    std::map<std::string, const ModelRecord*> by_id;
    for (const auto& m : models) by_id[m.model_id] = &m;
    std::vector<std::string> used_ids(used.begin(), used.end());
    std::map<std::string, std::size_t> model_index;
    std::vector<ModelRecord> fallback;  // ids with no record still relate to themselves
    fallback.reserve(used_ids.size());
    for (const auto& id : used_ids) {
        auto it = by_id.find(id);
        if (it != by_id.end()) {
            active.push_back(it->second);
        } else {
            fallback.push_back(ModelRecord{id, {}, {}, {}, {}});
            active.push_back(&fallback.back());
        }
        model_index[id] = active.size() - 1;
    }
    // fallback vector must not reallocate after pointers were taken
    // (reserved above)

    const std::size_t n = active.size();
    std::vector<unsigned char> rel_paper(n * n, 0), rel_model(n * n, 0), rel_dataset(n * n, 0);

    // model-pair relatedness; the pair space is the hot loop
    std::int64_t missing = 0, found = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : missing, found)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        CoverageReport cov;
        for (std::size_t j = static_cast<std::size_t>(i); j < n; ++j) {
            const ModelRecord& a = *active[static_cast<std::size_t>(i)];
            const ModelRecord& b = *active[j];
            unsigned char p = models_related_paper(a, b, papers, filter, &cov) ? 1 : 0;
            unsigned char m = models_related_card(a, b) ? 1 : 0;
            unsigned char d = models_related_dataset(a, b) ? 1 : 0;
            rel_paper[static_cast<std::size_t>(i) * n + j] = p;
            rel_paper[j * n + static_cast<std::size_t>(i)] = p;
            rel_model[static_cast<std::size_t>(i) * n + j] = m;
            rel_model[j * n + static_cast<std::size_t>(i)] = m;
            rel_dataset[static_cast<std::size_t>(i) * n + j] = d;
            rel_dataset[j * n + static_cast<std::size_t>(i)] = d;
        }
        missing += static_cast<std::int64_t>(cov.papers_missing);
        found += static_cast<std::int64_t>(cov.papers_found);
    }
    out.coverage.papers_missing = static_cast<std::size_t>(missing);
    out.coverage.papers_found = static_cast<std::size_t>(found);

    // expand model-level relations to table edges
    auto expand = [&](const std::vector<unsigned char>& rel) {
        std::set<std::pair<std::string, std::string>> edges;
        for (std::size_t a = 0; a < corpus.size(); ++a) {
            for (std::size_t b = a + 1; b < corpus.size(); ++b) {
                bool hit = false;
                for (const auto& ma : corpus[a].model_ids) {
                    std::size_t ia = model_index.at(ma);
                    for (const auto& mb : corpus[b].model_ids) {
                        if (rel[ia * n + model_index.at(mb)]) {
                            hit = true;
                            break;
                        }
                    }
                    if (hit) break;
                }
                if (hit) {
                    const std::string& ta = corpus[a].table_id;
                    const std::string& tb = corpus[b].table_id;
                    edges.insert(ta < tb ? std::make_pair(ta, tb) : std::make_pair(tb, ta));
                }
            }
        }
        return EdgeSet(edges.begin(), edges.end());
    };

    out.paper.edges = expand(rel_paper);
    out.model.edges = expand(rel_model);
    out.dataset.edges = expand(rel_dataset);

    std::set<std::pair<std::string, std::string>> merged(out.paper.edges.begin(),
                                                         out.paper.edges.end());
    merged.insert(out.model.edges.begin(), out.model.edges.end());
    merged.insert(out.dataset.edges.begin(), out.dataset.edges.end());
    out.all.edges.assign(merged.begin(), merged.end());
    return out;
}

DensityStats graph_density(const RelatednessGraph& g) {
    DensityStats s;
    s.n_tables = g.n_tables;
    s.ordered_nonzero = 2 * g.edges.size();
    if (g.n_tables >= 2) {
        double denom = static_cast<double>(g.n_tables) * static_cast<double>(g.n_tables - 1);
        s.density_percent = 100.0 * static_cast<double>(s.ordered_nonzero) / denom;
    }
    return s;
}

std::map<std::string, std::size_t> per_query_positive_counts(
    const RelatednessGraph& g, const std::vector<std::string>& table_ids) {
    std::map<std::string, std::size_t> counts;
    for (const auto& id : table_ids) counts[id] = 0;
    for (const auto& [a, b] : g.edges) {
        ++counts[a];
        ++counts[b];
    }
    return counts;
}

// --- persistence -----------------------------------------------------------

using nlohmann::json;

CitationIndex load_papers_jsonl(const std::filesystem::path& path) {
    CitationIndex index;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open papers file: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        PaperRecord p;
        p.paper_id = j.at("paper_id").get<std::string>();
        p.title = j.value("title", "");
        for (const auto& r : j.value("references", json::array())) {
            PaperReference ref;
            ref.cited_id = r.at("cited_id").get<std::string>();
            for (const auto& i : r.value("intents", json::array()))
                ref.intents.insert(citation_intent_from_name(i.get<std::string>()));
            ref.is_influential = r.value("is_influential", false);
            p.references.push_back(std::move(ref));
        }
        index[p.paper_id] = std::move(p);
    }
    return index;
}

std::vector<ModelRecord> load_models_jsonl(const std::filesystem::path& path) {
    std::vector<ModelRecord> models;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model records file: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        ModelRecord m;
        m.model_id = j.at("model_id").get<std::string>();
        auto read_set = [&](const char* key, std::set<std::string>& dst) {
            for (const auto& v : j.value(key, json::array())) dst.insert(v.get<std::string>());
        };
        read_set("papers", m.papers);
        read_set("linked_models", m.linked_models);
        read_set("base_models", m.base_models);
        read_set("datasets", m.datasets);
        models.push_back(std::move(m));
    }
    return models;
}

void save_models_jsonl(const std::filesystem::path& path,
                       const std::vector<ModelRecord>& models) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model records file: " + path.string());
    for (const auto& m : models) {
        json j;
        j["model_id"] = m.model_id;
        j["papers"] = m.papers;
        j["linked_models"] = m.linked_models;
        j["base_models"] = m.base_models;
        j["datasets"] = m.datasets;
        out << j.dump() << "\n";
    }
}

void save_edges_tsv(const std::filesystem::path& path, const TableGraphs& graphs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write edge file: " + path.string());
    out << "# n_tables\t" << graphs.paper.n_tables << "\tfilter\t" << graphs.paper.filter_desc
        << "\n";
    for (GraphLabel g : {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset,
                         GraphLabel::all})
        for (const auto& [a, b] : graphs.get(g).edges)
            out << a << "\t" << b << "\t" << graph_label_name(g) << "\n";
}

TableGraphs load_edges_tsv(const std::filesystem::path& path) {
    TableGraphs graphs;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge file: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::vector<std::string> parts;
            std::size_t start = 0;
            for (std::size_t i = 0; i <= line.size(); ++i)
                if (i == line.size() || line[i] == '\t') {
                    parts.push_back(line.substr(start, i - start));
                    start = i + 1;
                }
            if (parts.size() >= 2) {
                std::size_t nt = static_cast<std::size_t>(std::stoull(parts[1]));
                std::string desc = parts.size() >= 4 ? parts[3] : "";
                for (GraphLabel g : {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset,
                                     GraphLabel::all}) {
                    auto& graph = graphs.get_mut(g);
                    graph.label = g;
                    graph.n_tables = nt;
                    graph.filter_desc = desc;
                }
            }
            continue;
        }
        std::size_t t1 = line.find('\t');
        std::size_t t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) continue;
        std::string a = line.substr(0, t1);
        std::string b = line.substr(t1 + 1, t2 - t1 - 1);
        std::string label = line.substr(t2 + 1);
        auto add = [&](RelatednessGraph& g) { g.edges.emplace_back(a, b); };
        if (label == "paper") add(graphs.paper);
        else if (label == "model") add(graphs.model);
        else if (label == "dataset") add(graphs.dataset);
        else if (label == "all") add(graphs.all);
    }
    for (GraphLabel g : {GraphLabel::paper, GraphLabel::model, GraphLabel::dataset,
                         GraphLabel::all}) {
        auto& graph = graphs.get_mut(g);
        std::sort(graph.edges.begin(), graph.edges.end());
    }
    return graphs;
}

}  // namespace mtab
