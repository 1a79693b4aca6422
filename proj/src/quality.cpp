#include "mtab/quality.hpp"

#include <algorithm>

#include "mtab/util.hpp"

namespace mtab {

namespace {

bool cell_is_blank(const std::string& s) { return trim(s).empty(); }

// markdown alignment remnants: cells made of '-' and ':' runs only
bool cell_is_alignment_remnant(const std::string& s) {
    std::string t = trim(s);
    if (t.empty()) return false;
    bool has_dash = false;
    for (char c : t) {
        if (c == '-') has_dash = true;
        else if (c != ':') return false;
    }
    return has_dash;
}

}  // namespace

std::vector<Footnote> parse_footnotes(const std::vector<std::string>& lines) {
    std::vector<Footnote> notes;
    for (const auto& raw : lines) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::string marker;
        if (line[0] == '*') {
            std::size_t n = 0;
            while (n < line.size() && line[n] == '*') ++n;
            marker = line.substr(0, n);
        } else if (starts_with(line, "\xe2\x80\xa0") || starts_with(line, "\xe2\x80\xa1")) {
            marker = line.substr(0, 3);
        } else if (line[0] == '[') {
            std::size_t close = line.find(']');
            if (close == std::string::npos) continue;
            marker = line.substr(0, close + 1);
        } else {
            continue;
        }
        std::string text = trim(line.substr(marker.size()));
        if (starts_with(text, ":")) text = trim(text.substr(1));
        if (!text.empty()) notes.push_back({marker, text});
    }
    return notes;
}

ExtractedTable normalize_alignment(ExtractedTable t) {
    std::size_t width = t.max_cols();
    t.original_widths.clear();
    for (auto& row : t.cells) {
        t.original_widths.push_back(row.size());
        while (row.size() < width) row.emplace_back();
    }
    return t;
}

ExtractedTable merge_footnotes(ExtractedTable t, const std::vector<Footnote>& notes) {
    if (notes.empty()) return t;
    for (auto& row : t.cells) {
        for (auto& cell : row) {
            for (const auto& note : notes) {
                std::string trimmed = trim(cell);
                if (trimmed.size() > note.marker.size() &&
                    trimmed.compare(trimmed.size() - note.marker.size(), note.marker.size(),
                                    note.marker) == 0) {
                    std::string base =
                        trim(trimmed.substr(0, trimmed.size() - note.marker.size()));
                    cell = base + " (" + note.text + ")";
                    break;
                }
            }
        }
    }
    return t;
}

namespace {

bool headers_equal(const ExtractedTable& a, const ExtractedTable& b) {
    if (a.header_row_count != b.header_row_count) return false;
    for (int r = 0; r < a.header_row_count; ++r)
        if (a.cells[static_cast<std::size_t>(r)] != b.cells[static_cast<std::size_t>(r)])
            return false;
    return true;
}

bool can_stitch(const ExtractedTable& a, const ExtractedTable& b) {
    if (a.max_cols() != b.max_cols()) return false;
    if (b.header_row_count == 0) return true;
    return headers_equal(a, b);
}

void append_body(ExtractedTable& dst, const ExtractedTable& src) {
    for (std::size_t r = static_cast<std::size_t>(src.header_row_count); r < src.cells.size();
         ++r)
        dst.cells.push_back(src.cells[r]);
}

}  // namespace

std::vector<ExtractedTable> stitch_multipage(std::vector<ExtractedTable> tables) {
    std::vector<ExtractedTable> out;
    for (auto& t : tables) {
        if (!out.empty() && can_stitch(out.back(), t)) {
            append_body(out.back(), t);
        } else {
            out.push_back(std::move(t));
        }
    }
    return out;
}

namespace {

// One row/column sweep; dropping a blank column can expose a pure-remnant
// row, so prune_artifacts repeats this until nothing changes.
std::optional<ExtractedTable> prune_once(ExtractedTable t) {
    // drop rows that are all-blank or pure alignment remnants
    Grid kept_rows;
    int header_kept = 0;
    for (std::size_t r = 0; r < t.cells.size(); ++r) {
        const auto& row = t.cells[r];
        bool blank = std::all_of(row.begin(), row.end(), cell_is_blank);
        bool remnant = !row.empty() &&
                       std::all_of(row.begin(), row.end(), cell_is_alignment_remnant);
        if (blank || remnant) continue;
        if (static_cast<int>(r) < t.header_row_count) ++header_kept;
        kept_rows.push_back(row);
    }
    if (kept_rows.empty()) return std::nullopt;

    // drop all-blank columns
    std::size_t width = 0;
    for (const auto& row : kept_rows) width = std::max(width, row.size());
    std::vector<bool> col_keep(width, false);
    for (const auto& row : kept_rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            if (!cell_is_blank(row[c])) col_keep[c] = true;

    Grid final_rows;
    for (const auto& row : kept_rows) {
        std::vector<std::string> out_row;
        for (std::size_t c = 0; c < width; ++c)
            if (col_keep[c]) out_row.push_back(c < row.size() ? row[c] : std::string());
        if (!out_row.empty()) final_rows.push_back(std::move(out_row));
    }
    if (final_rows.empty() || final_rows.front().empty()) return std::nullopt;
    // a table that is all header and no body is not usable
    if (static_cast<std::size_t>(header_kept) >= final_rows.size() && header_kept > 0 &&
        final_rows.size() == static_cast<std::size_t>(header_kept))
        return std::nullopt;

    t.cells = std::move(final_rows);
    t.header_row_count = header_kept;
    return t;
}

}  // namespace

std::optional<ExtractedTable> prune_artifacts(ExtractedTable t) {
    for (;;) {
        Grid before = t.cells;
        auto pruned = prune_once(std::move(t));
        if (!pruned) return std::nullopt;
        if (pruned->cells == before) return pruned;
        t = std::move(*pruned);
    }
}

std::vector<CorpusEntry> strategic_filter(std::vector<CorpusEntry> corpus,
                                          const FilterConfig& cfg) {
    std::vector<CorpusEntry> out;
    for (auto& e : corpus) {
        if (!cfg.include_sources(e.table.source_kind)) continue;
        std::size_t body_rows =
            e.table.cells.size() - static_cast<std::size_t>(e.table.header_row_count);
        if (body_rows < cfg.min_rows) continue;
        if (e.table.max_cols() < cfg.min_cols) continue;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<CorpusEntry> clean_entries(std::vector<CorpusEntry> entries) {
    // stitch adjacent fragments within each document, in position order
    std::stable_sort(entries.begin(), entries.end(), [](const CorpusEntry& a,
                                                        const CorpusEntry& b) {
        return a.table.origin < b.table.origin;
    });
    std::vector<CorpusEntry> stitched;
    for (auto& e : entries) {
        e.table = normalize_alignment(std::move(e.table));
        if (!stitched.empty() &&
            stitched.back().table.origin.doc_id == e.table.origin.doc_id &&
            can_stitch(stitched.back().table, e.table)) {
            CorpusEntry& prev = stitched.back();
            append_body(prev.table, e.table);
            prev.model_ids.insert(e.model_ids.begin(), e.model_ids.end());
            for (auto& fl : e.footnote_lines) prev.footnote_lines.push_back(std::move(fl));
        } else {
            stitched.push_back(std::move(e));
        }
    }

    std::vector<CorpusEntry> out;
    for (auto& e : stitched) {
        e.table = merge_footnotes(std::move(e.table), parse_footnotes(e.footnote_lines));
        auto pruned = prune_artifacts(std::move(e.table));
        if (!pruned) continue;
        e.table = normalize_alignment(std::move(*pruned));
        out.push_back(std::move(e));
    }
    return out;
}

DedupResult dedup(const std::vector<CorpusEntry>& corpus) {
    struct Acc {
        const CorpusEntry* first = nullptr;
        std::vector<std::string> model_ids;
        std::vector<SourceContext> contexts;
        std::size_t occurrences = 0;
    };
    std::map<std::string, Acc> by_id;
    for (const auto& e : corpus) {
        std::string id = content_hash(e.table.cells, e.table.header_row_count);
        Acc& acc = by_id[id];
        if (!acc.first) acc.first = &e;
        for (const auto& m : e.model_ids)
            if (std::find(acc.model_ids.begin(), acc.model_ids.end(), m) == acc.model_ids.end())
                acc.model_ids.push_back(m);
        for (const auto& c : e.contexts) {
            bool dup = std::any_of(acc.contexts.begin(), acc.contexts.end(),
                                   [&](const SourceContext& x) { return x.origin == c.origin; });
            if (!dup) acc.contexts.push_back(c);
            ++acc.occurrences;
        }
        if (e.contexts.empty()) ++acc.occurrences;
    }

    DedupResult result;
    for (auto& [id, acc] : by_id) {
        CorpusRecord rec;
        rec.table.table_id = id;
        rec.table.cells = acc.first->table.cells;
        rec.table.header_row_count = acc.first->table.header_row_count;
        rec.table.caption = acc.first->table.caption;
        rec.table.n_rows = rec.table.cells.size();
        rec.table.n_cols = rec.table.cells.empty() ? 0 : rec.table.cells.front().size();

        std::sort(acc.contexts.begin(), acc.contexts.end(),
                  [](const SourceContext& a, const SourceContext& b) {
                      return a.origin < b.origin;
                  });
        for (const auto& c : acc.contexts) {
            rec.table.sources.push_back(c.origin);
            rec.source_kinds.push_back(c.kind);
            rec.source_contexts.push_back(c.text);
            if (!c.text.empty()) {
                if (!rec.context_text.empty()) rec.context_text.push_back('\n');
                rec.context_text += c.text;
            }
        }
        rec.model_ids = acc.model_ids;
        std::sort(rec.model_ids.begin(), rec.model_ids.end());
        result.frequencies[id] = acc.occurrences;
        result.corpus.push_back(std::move(rec));
    }
    return result;
}

}  // namespace mtab
