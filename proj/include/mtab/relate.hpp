#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mtab {

enum class CitationIntent { methodology, result, background, other };

const char* citation_intent_name(CitationIntent i);
CitationIntent citation_intent_from_name(const std::string& name);

struct PaperReference {
    std::string cited_id;
    std::set<CitationIntent> intents;
    bool is_influential = false;
};

struct PaperRecord {
    std::string paper_id;
    std::string title;
    std::vector<PaperReference> references;
};

using CitationIndex = std::map<std::string, PaperRecord>;

struct ModelRecord {
    std::string model_id;
    std::set<std::string> papers;
    std::set<std::string> linked_models;
    std::set<std::string> base_models;
    std::set<std::string> datasets;
};

enum class RelationType { direct, overlap };

// The 2 (relation) x 2 (intent) x 2 (influential) space yields the eight
// citation-filtered paper graphs.
struct CitationFilter {
    RelationType relation = RelationType::direct;
    bool require_intent = false;       // keep refs whose intents hit {methodology, result}
    bool require_influential = false;

    std::string describe() const;
};

// cited ids surviving the intent/influential requirements
std::set<std::string> filter_references(const std::vector<PaperReference>& refs,
                                        const CitationFilter& filter);

struct CoverageReport {
    std::size_t papers_missing = 0;  // referenced by models but absent from the index
    std::size_t papers_found = 0;
};

bool papers_related(const std::string& p_a, const std::string& p_b, const CitationIndex& index,
                    const CitationFilter& filter, CoverageReport* coverage = nullptr);

bool models_related_paper(const ModelRecord& m_a, const ModelRecord& m_b,
                          const CitationIndex& index, const CitationFilter& filter,
                          CoverageReport* coverage = nullptr);

// Card linkage, lineage, or shared base model. A model is related to itself.
bool models_related_card(const ModelRecord& m_a, const ModelRecord& m_b);

bool models_related_dataset(const ModelRecord& m_a, const ModelRecord& m_b);

enum class GraphLabel { paper, model, dataset, all };
const char* graph_label_name(GraphLabel g);

using EdgeSet = std::vector<std::pair<std::string, std::string>>;  // a < b, sorted

struct RelatednessGraph {
    GraphLabel label = GraphLabel::paper;
    std::string filter_desc;
    std::size_t n_tables = 0;
    EdgeSet edges;

    bool related(const std::string& a, const std::string& b) const;
};

struct TableGraphs {
    RelatednessGraph paper, model, dataset, all;
    CoverageReport coverage;

    const RelatednessGraph& get(GraphLabel g) const;
    RelatednessGraph& get_mut(GraphLabel g);
};

// Table corpus view needed by ground-truth inference: id plus associated
// model ids.
struct TableModels {
    std::string table_id;
    std::vector<std::string> model_ids;
};

// Computes model-pair relatedness first (parallel over the pair space) and
// expands to table edges through the table->models mapping; never builds a
// dense table x table matrix. Output is deterministic regardless of thread
// count.
TableGraphs build_table_graphs(const std::vector<TableModels>& corpus,
                               const std::vector<ModelRecord>& models,
                               const CitationIndex& papers, const CitationFilter& filter);

struct DensityStats {
    std::size_t n_tables = 0;
    std::size_t ordered_nonzero = 0;  // 2 * |edges|
    double density_percent = 0.0;     // 2|E| / (n(n-1)) * 100, 0 when n < 2
};

DensityStats graph_density(const RelatednessGraph& g);

// Per-table count of distinct related tables (zeros included).
std::map<std::string, std::size_t> per_query_positive_counts(
    const RelatednessGraph& g, const std::vector<std::string>& table_ids);

// --- persistence -----------------------------------------------------------

CitationIndex load_papers_jsonl(const std::filesystem::path& path);
std::vector<ModelRecord> load_models_jsonl(const std::filesystem::path& path);
void save_models_jsonl(const std::filesystem::path& path,
                       const std::vector<ModelRecord>& models);

void save_edges_tsv(const std::filesystem::path& path, const TableGraphs& graphs);
TableGraphs load_edges_tsv(const std::filesystem::path& path);

}  // namespace mtab
