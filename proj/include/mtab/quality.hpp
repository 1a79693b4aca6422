#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtab/extract.hpp"
#include "mtab/table.hpp"

namespace mtab {

struct Footnote {
    std::string marker;  // one of *, †, ‡, [n] by default; grammar is extensible
    std::string text;
};

// Parses footnote lines (e.g. "* dev set" or "[1] test only") captured after
// a table.
std::vector<Footnote> parse_footnotes(const std::vector<std::string>& lines);

// Pads short rows with empty strings so every row has the maximum width.
// Original widths are recorded for diagnostics.
ExtractedTable normalize_alignment(ExtractedTable t);

// Appends " (<note>)" to each cell ending in a known marker and removes the
// marker. Unreferenced notes are ignored.
ExtractedTable merge_footnotes(ExtractedTable t, const std::vector<Footnote>& notes);

// Merges adjacent fragments with equal width and equal header content (or a
// headerless successor of equal width). The first fragment's header and
// caption win.
std::vector<ExtractedTable> stitch_multipage(std::vector<ExtractedTable> tables);

// Drops all-empty rows/columns and markdown alignment remnants. Special
// characters like \lambda stay verbatim. Returns nothing if the body empties.
std::optional<ExtractedTable> prune_artifacts(ExtractedTable t);

struct FilterConfig {
    std::size_t min_rows = 1;  // body rows
    std::size_t min_cols = 2;
    bool include_s2 = false;
    bool include_sources(SourceKind k) const {
        return k != SourceKind::s2_text || include_s2;
    }
};

std::vector<CorpusEntry> strategic_filter(std::vector<CorpusEntry> corpus,
                                          const FilterConfig& cfg);

// Canonical table plus its linkage, as written to the corpus file.
struct CorpusRecord {
    CanonicalTable table;
    std::vector<SourceKind> source_kinds;      // aligned with table.sources
    std::vector<std::string> model_ids;        // sorted
    std::vector<std::string> source_contexts;  // aligned with table.sources
    std::string context_text;                  // concatenation in source order
};

struct DedupResult {
    std::vector<CorpusRecord> corpus;                 // sorted by table_id
    std::map<std::string, std::size_t> frequencies;   // pre-dedup occurrence counts
};

// One CanonicalTable per content hash; model ids and sources unioned across
// duplicates.
DedupResult dedup(const std::vector<CorpusEntry>& corpus);

// Full repair pipeline for one document's tables: stitch, align, merge
// footnotes, prune. Entries whose table empties out are dropped.
std::vector<CorpusEntry> clean_entries(std::vector<CorpusEntry> entries);

}  // namespace mtab
