#include "mtab/table.hpp"

#include <algorithm>

#include "mtab/util.hpp"

namespace mtab {

const char* source_kind_name(SourceKind k) {
    switch (k) {
        case SourceKind::model_card: return "model_card";
        case SourceKind::dataset_card: return "dataset_card";
        case SourceKind::github_readme: return "github_readme";
        case SourceKind::arxiv_html: return "arxiv_html";
        case SourceKind::s2_text: return "s2_text";
    }
    return "unknown";
}

std::optional<SourceKind> source_kind_from_name(const std::string& name) {
    if (name == "model_card") return SourceKind::model_card;
    if (name == "dataset_card") return SourceKind::dataset_card;
    if (name == "github_readme") return SourceKind::github_readme;
    if (name == "arxiv_html") return SourceKind::arxiv_html;
    if (name == "s2_text") return SourceKind::s2_text;
    return std::nullopt;
}

std::size_t ExtractedTable::max_cols() const {
    std::size_t m = 0;
    for (const auto& row : cells) m = std::max(m, row.size());
    return m;
}

bool ExtractedTable::rectangular() const {
    if (cells.empty()) return false;
    std::size_t w = cells.front().size();
    return std::all_of(cells.begin(), cells.end(),
                       [w](const auto& r) { return r.size() == w; });
}

std::uint64_t content_hash_raw(const Grid& cells, int header_row_count) {
    std::uint64_t h = fnv1a64("mtab.table.v1");
    auto feed = [&h](std::string_view s) {
        h = fnv1a64(s, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
    };
    std::size_t n_cols = cells.empty() ? 0 : cells.front().size();
    feed(std::to_string(cells.size()));
    feed(std::to_string(n_cols));
    feed(std::to_string(header_row_count));
    for (const auto& row : cells)
        for (const auto& cell : row) feed(collapse_ws(cell));
    return h;
}

std::string content_hash(const Grid& cells, int header_row_count) {
    return to_hex16(content_hash_raw(cells, header_row_count));
}

namespace {

std::string escape_cell(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\') out += "\\\\";
        else if (c == '|') out += "\\|";
        else out.push_back(c);
    }
    return out;
}

void render_row(std::string& out, const std::vector<std::string>& row) {
    out.push_back('|');
    for (const auto& cell : row) {
        out.push_back(' ');
        out += escape_cell(cell);
        out += " |";
    }
    out.push_back('\n');
}

}  // namespace

std::string render_markdown(const CanonicalTable& t) {
    std::string out;
    std::size_t i = 0;
    if (t.header_row_count >= 1 && !t.cells.empty()) {
        render_row(out, t.cells[0]);
        out.push_back('|');
        for (std::size_t c = 0; c < t.n_cols; ++c) out += " --- |";
        out.push_back('\n');
        i = 1;
    }
    for (; i < t.cells.size(); ++i) render_row(out, t.cells[i]);
    return out;
}

std::string serialize_table(const CanonicalTable& t) {
    std::string out;
    if (!t.caption.empty()) out = t.caption;
    bool first_row = true;
    for (const auto& row : t.cells) {
        if (!first_row) {
            if (!out.empty()) out.push_back(' ');
            out += "[ROW]";
        }
        first_row = false;
        for (const auto& cell : row) {
            if (!out.empty()) out.push_back(' ');
            out += cell;
        }
    }
    return out;
}

}  // namespace mtab
