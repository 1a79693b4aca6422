#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mtab/ingest.hpp"
#include "mtab/table.hpp"

namespace mtab {

// Raw table text from an S2ORC-style dump has no row/column structure; a
// recoverer turns it back into a grid. The default is deterministic; an
// LLM-backed implementation can be plugged in behind this interface.
class TextTableRecoverer {
public:
    virtual ~TextTableRecoverer() = default;
    virtual std::optional<Grid> recover(const std::string& raw) = 0;
};

// Splits lines on runs of >= 2 spaces or tabs; accepts the result only if at
// least 80% of lines produce the modal column count (and that count is > 1).
class WhitespaceAlignmentRecoverer : public TextTableRecoverer {
public:
    std::optional<Grid> recover(const std::string& raw) override;
};

struct ExtractStats {
    std::size_t empty_html_tables = 0;
    std::size_t recoverer_rejects = 0;
    std::size_t missing_referenced_docs = 0;
    std::size_t orphan_tables = 0;  // no model could be linked
};

// GitHub-flavored pipe tables. Pipes inside inline code spans and escaped
// pipes stay inside their cell. A pipe-run with no delimiter row is captured
// with header_row_count = 0. Lines following a table (blank lines allowed in
// between) that start with a footnote marker are carried along for the
// quality stage.
std::vector<ExtractedTable> extract_markdown_tables(
    const std::string& body, std::vector<std::vector<std::string>>* footnote_lines = nullptr);

// Tolerant <table> extraction: th rows count toward header_row_count,
// rowspan/colspan expand by duplicating the value, <caption> is kept.
std::vector<ExtractedTable> extract_html_tables(const std::string& markup,
                                                ExtractStats* stats = nullptr);

std::optional<ExtractedTable> recover_text_table(const std::string& raw,
                                                 TextTableRecoverer& recoverer,
                                                 ExtractStats* stats = nullptr);

struct SourceContext {
    TableOrigin origin;
    SourceKind kind = SourceKind::model_card;
    std::string text;  // README text, or caption for paper sources
};

struct CorpusEntry {
    ExtractedTable table;
    std::set<std::string> model_ids;  // non-empty
    std::vector<SourceContext> contexts;
    std::vector<std::string> footnote_lines;
};

// Minimal per-model metadata mined from the cards; feeds the relatedness
// module.
struct ModelCardInfo {
    std::string model_id;
    std::set<std::string> papers;
    std::set<std::string> linked_models;
    std::set<std::string> base_models;
    std::set<std::string> datasets;
};

struct CorpusBuild {
    std::vector<CorpusEntry> entries;
    std::vector<ModelCardInfo> models;
    ExtractStats stats;
};

// Walks model cards first, then their referenced arXiv/S2 documents, then
// GitHub READMEs, linking every table back to the originating model. A
// physically identical table reached from two cards appears once with the
// union of model ids. Dataset-card tables attach to every model that
// references the dataset.
CorpusBuild build_corpus(const std::vector<SourceDocument>& docs,
                         const std::map<std::string, std::vector<LinkRef>>& doc_links,
                         const AliasTable& aliases,
                         const std::map<std::string, std::string>& paper_title_to_id,
                         TextTableRecoverer* recoverer = nullptr);

// doc_id convention: org__repo.md <-> org/repo (and arxiv ids with '/' use '_').
std::string doc_id_to_entity(const std::string& doc_id);
std::string entity_to_doc_stem(const std::string& entity);

}  // namespace mtab
