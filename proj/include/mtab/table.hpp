#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtab {

enum class SourceKind { model_card, dataset_card, github_readme, arxiv_html, s2_text };

const char* source_kind_name(SourceKind k);
std::optional<SourceKind> source_kind_from_name(const std::string& name);

using Grid = std::vector<std::vector<std::string>>;

struct TableOrigin {
    std::string doc_id;
    int position = 0;  // strictly increasing within a document

    auto operator<=>(const TableOrigin&) const = default;
};

// Raw extraction output; rows may still be ragged at this stage.
struct ExtractedTable {
    Grid cells;
    int header_row_count = 0;
    std::string caption;
    TableOrigin origin;
    SourceKind source_kind = SourceKind::model_card;
    std::vector<std::size_t> original_widths;  // pre-padding row widths, for diagnostics

    std::size_t n_rows() const { return cells.size(); }
    std::size_t max_cols() const;
    bool rectangular() const;
};

// Post-quality-control table: strictly rectangular, no empty rows/columns,
// identified by its content hash.
struct CanonicalTable {
    std::string table_id;  // 16-hex content hash
    Grid cells;
    int header_row_count = 0;
    std::string caption;
    std::vector<TableOrigin> sources;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
};

// Stable hash over n_rows, n_cols, header_row_count and whitespace-normalized
// cells (trimmed, internal runs collapsed, case preserved).
std::uint64_t content_hash_raw(const Grid& cells, int header_row_count);
std::string content_hash(const Grid& cells, int header_row_count);

// GitHub-flavored pipe-table rendering. Pipes and backslashes inside cells
// are escaped so the markdown parser reproduces cells exactly.
std::string render_markdown(const CanonicalTable& t);

// Deterministic flat-text form: caption, header cells, then body cells
// row-major, rows separated by the [ROW] token.
std::string serialize_table(const CanonicalTable& t);

}  // namespace mtab
