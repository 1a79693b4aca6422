#include "mtab/extract.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "mtab/util.hpp"

namespace mtab {

namespace {

constexpr char kPipeSentinel = '\x01';
constexpr char kBackslashSentinel = '\x02';

// Splits one markdown line into cells. Escaped pipes and pipes inside
// backtick code spans stay in their cell.
bool parse_md_row(const std::string& line, std::vector<std::string>& cells) {
    std::string masked;
    masked.reserve(line.size());
    bool in_code = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '\\' && i + 1 < line.size()) {
            char n = line[i + 1];
            if (n == '|') {
                masked.push_back(kPipeSentinel);
                ++i;
                continue;
            }
            if (n == '\\') {
                masked.push_back(kBackslashSentinel);
                ++i;
                continue;
            }
            masked.push_back(c);
            continue;
        }
        if (c == '`') {
            in_code = !in_code;
            masked.push_back(c);
            continue;
        }
        if (c == '|' && in_code) {
            masked.push_back(kPipeSentinel);
            continue;
        }
        masked.push_back(c);
    }
    if (masked.find('|') == std::string::npos) return false;

    std::string t = trim(masked);
    bool leading = !t.empty() && t.front() == '|';
    bool trailing = t.size() > 1 && t.back() == '|';
    std::vector<std::string> parts;
    std::string cur;
    for (char c : t) {
        if (c == '|') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (leading && !parts.empty()) parts.erase(parts.begin());
    if (trailing && !parts.empty()) parts.pop_back();

    cells.clear();
    for (auto& p : parts) {
        std::string cell = trim(p);
        std::string unmasked;
        unmasked.reserve(cell.size());
        for (char c : cell) {
            if (c == kPipeSentinel) unmasked.push_back('|');
            else if (c == kBackslashSentinel) unmasked.push_back('\\');
            else unmasked.push_back(c);
        }
        cells.push_back(std::move(unmasked));
    }
    return !cells.empty();
}

bool is_delimiter_cell(const std::string& cell) {
    if (cell.empty()) return false;
    std::size_t dashes = 0;
    for (std::size_t i = 0; i < cell.size(); ++i) {
        char c = cell[i];
        if (c == '-') ++dashes;
        else if (c == ':' && (i == 0 || i == cell.size() - 1)) continue;
        else return false;
    }
    return dashes > 0;
}

bool is_delimiter_row(const std::vector<std::string>& cells) {
    return std::all_of(cells.begin(), cells.end(), is_delimiter_cell);
}

bool is_footnote_line(const std::string& line) {
    std::string t = trim(line);
    if (t.empty()) return false;
    if (t[0] == '*') return true;
    if (starts_with(t, "\xe2\x80\xa0") || starts_with(t, "\xe2\x80\xa1")) return true;  // † ‡
    if (t[0] == '[') {
        std::size_t close = t.find(']');
        if (close != std::string::npos && close > 1 &&
            std::all_of(t.begin() + 1, t.begin() + static_cast<long>(close), [](char c) {
                return std::isdigit(static_cast<unsigned char>(c));
            }))
            return true;
    }
    return false;
}

std::vector<std::string> split_lines(const std::string& body) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : body) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

}  // namespace

std::vector<ExtractedTable> extract_markdown_tables(
    const std::string& body, std::vector<std::vector<std::string>>* footnote_lines) {
    std::vector<ExtractedTable> tables;
    if (footnote_lines) footnote_lines->clear();

    std::vector<std::string> lines = split_lines(body);
    std::size_t i = 0;
    int position = 0;
    while (i < lines.size()) {
        std::vector<std::string> cells;
        if (!parse_md_row(lines[i], cells)) {
            ++i;
            continue;
        }
        Grid rows;
        rows.push_back(std::move(cells));
        std::size_t j = i + 1;
        int header_rows = 0;
        while (j < lines.size()) {
            std::vector<std::string> next;
            if (!parse_md_row(lines[j], next)) break;
            if (rows.size() == 1 && header_rows == 0 && is_delimiter_row(next)) {
                header_rows = 1;
            } else {
                rows.push_back(std::move(next));
            }
            ++j;
        }
        ExtractedTable t;
        t.cells = std::move(rows);
        t.header_row_count = header_rows;
        t.origin.position = position++;
        tables.push_back(std::move(t));

        if (footnote_lines) {
            std::vector<std::string> notes;
            std::size_t k = j;
            while (k < lines.size() && trim(lines[k]).empty()) ++k;  // notes may follow a gap
            while (k < lines.size() && is_footnote_line(lines[k])) notes.push_back(trim(lines[k++]));
            footnote_lines->push_back(std::move(notes));
        }
        i = j;
    }
    return tables;
}

// ---------------------------------------------------------------------------
// HTML tables

namespace {

std::string decode_entities(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '&') {
            std::size_t semi = s.find(';', i);
            if (semi != std::string::npos && semi - i <= 8) {
                std::string ent = s.substr(i + 1, semi - i - 1);
                std::string rep;
                if (ent == "amp") rep = "&";
                else if (ent == "lt") rep = "<";
                else if (ent == "gt") rep = ">";
                else if (ent == "quot") rep = "\"";
                else if (ent == "apos" || ent == "#39") rep = "'";
                else if (ent == "nbsp") rep = " ";
                else if (!ent.empty() && ent[0] == '#') {
                    int code = std::atoi(ent.c_str() + 1);
                    if (code > 0 && code < 128) rep = std::string(1, static_cast<char>(code));
                }
                if (!rep.empty()) {
                    out += rep;
                    i = semi + 1;
                    continue;
                }
            }
        }
        out.push_back(s[i++]);
    }
    return out;
}

std::string strip_tags(const std::string& s) {
    std::string out;
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') in_tag = true;
        else if (c == '>') in_tag = false;
        else if (!in_tag) out.push_back(c);
    }
    return collapse_ws(decode_entities(out));
}

int attr_int(const std::string& attrs, const std::string& name, int fallback) {
    std::string lower = to_lower(attrs);
    std::size_t p = lower.find(name);
    if (p == std::string::npos) return fallback;
    p = lower.find_first_of("0123456789", p + name.size());
    if (p == std::string::npos) return fallback;
    int v = std::atoi(lower.c_str() + p);
    return v > 0 ? v : fallback;
}

struct HtmlCell {
    std::string text;
    bool header = false;
    int rowspan = 1;
    int colspan = 1;
};

// Finds the next tag named `name` (lowercase) at or after `from` in `lower`.
std::size_t find_tag(const std::string& lower, const std::string& name, std::size_t from) {
    std::size_t p = from;
    while ((p = lower.find("<" + name, p)) != std::string::npos) {
        std::size_t after = p + 1 + name.size();
        if (after >= lower.size() || lower[after] == '>' || lower[after] == ' ' ||
            lower[after] == '\t' || lower[after] == '\n' || lower[after] == '/')
            return p;
        ++p;
    }
    return std::string::npos;
}

}  // namespace

std::vector<ExtractedTable> extract_html_tables(const std::string& markup, ExtractStats* stats) {
    std::vector<ExtractedTable> tables;
    std::string lower = to_lower(markup);
    std::size_t pos = 0;
    int position = 0;
    while (true) {
        std::size_t tstart = find_tag(lower, "table", pos);
        if (tstart == std::string::npos) break;
        std::size_t tend = lower.find("</table", tstart);
        if (tend == std::string::npos) tend = lower.size();
        pos = tend + 1;

        std::string caption;
        std::size_t cstart = find_tag(lower, "caption", tstart);
        if (cstart != std::string::npos && cstart < tend) {
            std::size_t copen = lower.find('>', cstart);
            std::size_t cclose = lower.find("</caption", cstart);
            if (copen != std::string::npos && cclose != std::string::npos && cclose < tend)
                caption = strip_tags(markup.substr(copen + 1, cclose - copen - 1));
        }

        // collect rows of cells
        std::vector<std::vector<HtmlCell>> rows;
        std::size_t rpos = tstart;
        while (true) {
            std::size_t rstart = find_tag(lower, "tr", rpos);
            if (rstart == std::string::npos || rstart >= tend) break;
            std::size_t rnext = find_tag(lower, "tr", rstart + 1);
            std::size_t rend = std::min(rnext == std::string::npos ? tend : rnext, tend);

            std::vector<HtmlCell> cells;
            std::size_t cpos = rstart;
            while (true) {
                std::size_t th = find_tag(lower, "th", cpos);
                std::size_t td = find_tag(lower, "td", cpos);
                std::size_t cell_start = std::min(th == std::string::npos ? rend : th,
                                                  td == std::string::npos ? rend : td);
                if (cell_start >= rend) break;
                bool header = cell_start == th;
                std::size_t attr_end = lower.find('>', cell_start);
                if (attr_end == std::string::npos || attr_end >= rend) break;
                std::string attrs = markup.substr(cell_start, attr_end - cell_start);

                std::size_t next_th = find_tag(lower, "th", attr_end);
                std::size_t next_td = find_tag(lower, "td", attr_end);
                std::size_t close = lower.find(header ? "</th" : "</td", attr_end);
                std::size_t content_end = rend;
                for (std::size_t cand : {next_th, next_td, close})
                    if (cand != std::string::npos) content_end = std::min(content_end, cand);

                HtmlCell cell;
                cell.text = strip_tags(markup.substr(attr_end + 1, content_end - attr_end - 1));
                cell.header = header;
                cell.rowspan = attr_int(attrs, "rowspan", 1);
                cell.colspan = attr_int(attrs, "colspan", 1);
                cells.push_back(std::move(cell));
                cpos = std::max(content_end, attr_end + 1);
            }
            if (!cells.empty()) rows.push_back(std::move(cells));
            rpos = rend;
            if (rnext == std::string::npos || rnext >= tend) break;
        }

        if (rows.empty()) {
            if (stats) ++stats->empty_html_tables;
            continue;
        }

        // expand row/col spans into a dense grid
        std::vector<std::vector<std::string>> grid;
        std::vector<std::vector<bool>> occupied;
        std::vector<std::vector<bool>> is_header_cell;
        auto ensure = [&](std::size_t r, std::size_t c) {
            while (grid.size() <= r) {
                grid.emplace_back();
                occupied.emplace_back();
                is_header_cell.emplace_back();
            }
            while (grid[r].size() <= c) {
                grid[r].emplace_back();
                occupied[r].push_back(false);
                is_header_cell[r].push_back(false);
            }
        };
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::size_t c = 0;
            for (const auto& cell : rows[r]) {
                ensure(r, c);
                while (occupied[r][c]) {
                    ++c;
                    ensure(r, c);
                }
                for (int dr = 0; dr < cell.rowspan; ++dr)
                    for (int dc = 0; dc < cell.colspan; ++dc) {
                        ensure(r + dr, c + dc);
                        grid[r + dr][c + dc] = cell.text;
                        occupied[r + dr][c + dc] = true;
                        is_header_cell[r + dr][c + dc] = cell.header;
                    }
                c += static_cast<std::size_t>(cell.colspan);
            }
        }

        int header_rows = 0;
        for (std::size_t r = 0; r < grid.size(); ++r) {
            bool all_th = !is_header_cell[r].empty() &&
                          std::all_of(is_header_cell[r].begin(), is_header_cell[r].end(),
                                      [](bool b) { return b; });
            if (all_th) ++header_rows;
            else break;
        }

        ExtractedTable t;
        t.cells = std::move(grid);
        t.header_row_count = header_rows;
        t.caption = caption;
        t.origin.position = position++;
        tables.push_back(std::move(t));
    }
    return tables;
}

// ---------------------------------------------------------------------------
// Plain-text recovery

std::optional<Grid> WhitespaceAlignmentRecoverer::recover(const std::string& raw) {
    std::vector<std::string> lines;
    for (auto& l : split_lines(raw))
        if (!trim(l).empty()) lines.push_back(l);
    if (lines.empty()) return std::nullopt;

    auto split_fields = [](const std::string& line) {
        std::vector<std::string> fields;
        std::size_t i = 0;
        while (i < line.size()) {
            // delimiter: tab, or a run of >= 2 spaces
            if (line[i] == '\t' || (line[i] == ' ' && i + 1 < line.size() && line[i + 1] == ' ')) {
                while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
                continue;
            }
            std::size_t j = i;
            std::string field;
            while (j < line.size()) {
                if (line[j] == '\t') break;
                if (line[j] == ' ' && j + 1 < line.size() && line[j + 1] == ' ') break;
                if (line[j] == ' ' && j + 1 == line.size()) break;
                field.push_back(line[j++]);
            }
            fields.push_back(trim(field));
            i = j;
        }
        return fields;
    };

    std::vector<std::vector<std::string>> rows;
    std::map<std::size_t, std::size_t> width_counts;
    for (const auto& l : lines) {
        auto f = split_fields(l);
        width_counts[f.size()]++;
        rows.push_back(std::move(f));
    }
    std::size_t modal = 0, modal_count = 0;
    for (auto [w, c] : width_counts)
        if (c > modal_count || (c == modal_count && w > modal)) {
            modal = w;
            modal_count = c;
        }
    if (modal < 2) return std::nullopt;
    if (static_cast<double>(modal_count) < 0.8 * static_cast<double>(rows.size()))
        return std::nullopt;

    for (auto& r : rows) {
        while (r.size() < modal) r.emplace_back();
        if (r.size() > modal) {
            // fold extras into the last column
            std::string tail = r[modal - 1];
            for (std::size_t i = modal; i < r.size(); ++i) tail += " " + r[i];
            r.resize(modal);
            r[modal - 1] = tail;
        }
    }
    return rows;
}

std::optional<ExtractedTable> recover_text_table(const std::string& raw,
                                                 TextTableRecoverer& recoverer,
                                                 ExtractStats* stats) {
    auto grid = recoverer.recover(raw);
    if (!grid || grid->empty()) {
        if (stats) ++stats->recoverer_rejects;
        return std::nullopt;
    }
    ExtractedTable t;
    t.cells = std::move(*grid);
    t.header_row_count = 0;
    t.source_kind = SourceKind::s2_text;
    return t;
}

// ---------------------------------------------------------------------------
// Corpus construction

std::string doc_id_to_entity(const std::string& doc_id) {
    std::string stem = doc_id;
    std::size_t dot = stem.rfind('.');
    if (dot != std::string::npos) stem.resize(dot);
    std::size_t sep = stem.find("__");
    if (sep != std::string::npos) return stem.substr(0, sep) + "/" + stem.substr(sep + 2);
    return stem;
}

std::string entity_to_doc_stem(const std::string& entity) {
    std::string stem = entity;
    std::size_t slash = stem.find('/');
    if (slash != std::string::npos) stem = stem.substr(0, slash) + "__" + stem.substr(slash + 1);
    return stem;
}

namespace {

// Mines `key:` scalar or list values from YAML-ish front matter / tag blocks.
std::set<std::string> mine_tag_values(const std::string& body, const std::string& key) {
    std::set<std::string> values;
    std::vector<std::string> lines = split_lines(body);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string t = trim(lines[i]);
        if (!starts_with(t, key)) continue;
        std::string rest = trim(t.substr(key.size()));
        if (!starts_with(rest, ":")) continue;
        rest = trim(rest.substr(1));
        if (!rest.empty()) {
            if (rest.front() == '[') {  // inline list
                std::string inner = rest.substr(1, rest.rfind(']') - 1);
                std::istringstream ss(inner);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    item = trim(item);
                    if (!item.empty()) values.insert(item);
                }
            } else {
                values.insert(rest);
            }
        } else {
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                std::string li = trim(lines[j]);
                if (!starts_with(li, "-")) break;
                std::string item = trim(li.substr(1));
                if (!item.empty()) values.insert(item);
            }
        }
    }
    return values;
}

}  // namespace

CorpusBuild build_corpus(const std::vector<SourceDocument>& docs,
                         const std::map<std::string, std::vector<LinkRef>>& doc_links,
                         const AliasTable& aliases,
                         const std::map<std::string, std::string>& paper_title_to_id,
                         TextTableRecoverer* recoverer) {
    WhitespaceAlignmentRecoverer default_recoverer;
    if (!recoverer) recoverer = &default_recoverer;

    CorpusBuild build;
    std::map<std::string, const SourceDocument*> by_key;  // "<kind>/<doc_id>"
    for (const auto& d : docs)
        by_key[std::string(source_kind_name(d.source_kind)) + "/" + d.doc_id] = &d;

    auto links_of = [&](const std::string& doc_id) -> const std::vector<LinkRef>* {
        auto it = doc_links.find(doc_id);
        return it == doc_links.end() ? nullptr : &it->second;
    };

    // keyed by raw-content hash so a physically identical table reached from
    // two cards appears once with the union of model ids
    std::map<std::uint64_t, std::size_t> entry_by_hash;

    auto add_table = [&](ExtractedTable t, SourceKind kind, const std::string& doc_id,
                         const std::string& model_id, const std::string& context,
                         std::vector<std::string> footnotes) {
        t.source_kind = kind;
        t.origin.doc_id = doc_id;
        std::uint64_t h = content_hash_raw(t.cells, t.header_row_count);
        auto it = entry_by_hash.find(h);
        if (it == entry_by_hash.end()) {
            CorpusEntry e;
            e.table = std::move(t);
            e.model_ids.insert(model_id);
            e.contexts.push_back({e.table.origin, kind, context});
            e.footnote_lines = std::move(footnotes);
            entry_by_hash[h] = build.entries.size();
            build.entries.push_back(std::move(e));
        } else {
            CorpusEntry& e = build.entries[it->second];
            e.model_ids.insert(model_id);
            SourceContext sc{t.origin, kind, context};
            bool dup_source = std::any_of(e.contexts.begin(), e.contexts.end(),
                                          [&](const SourceContext& c) {
                                              return c.origin == sc.origin;
                                          });
            if (!dup_source) e.contexts.push_back(std::move(sc));
        }
    };

    // dataset id -> models referencing it (for data-card table linkage)
    std::map<std::string, std::set<std::string>> dataset_to_models;

    for (const auto& doc : docs) {
        if (doc.source_kind != SourceKind::model_card) continue;
        std::string model_id = doc_id_to_entity(doc.doc_id);

        ModelCardInfo info;
        info.model_id = model_id;
        for (const auto& bm : mine_tag_values(doc.body, "base_model")) {
            auto res = resolve_model_alias(bm, aliases);
            if (res.model_id != model_id) info.base_models.insert(res.model_id);
        }
        for (const auto& ds : mine_tag_values(doc.body, "datasets"))
            info.datasets.insert(ds);

        std::vector<std::string> paper_ids;
        std::vector<std::string> github_repos;
        if (const auto* links = links_of(doc.doc_id)) {
            for (const auto& raw : *links) {
                LinkRef link = classify_link(raw);
                switch (link.kind) {
                    case LinkKind::arxiv_paper:
                        if (link.canonical_id) paper_ids.push_back(*link.canonical_id);
                        break;
                    case LinkKind::bibtex_title:
                        if (link.canonical_id) {
                            auto it = paper_title_to_id.find(to_lower(*link.canonical_id));
                            if (it != paper_title_to_id.end()) paper_ids.push_back(it->second);
                        }
                        break;
                    case LinkKind::github_repo:
                        if (link.canonical_id) github_repos.push_back(*link.canonical_id);
                        break;
                    case LinkKind::hf_model:
                        if (link.canonical_id) {
                            auto res = resolve_model_alias(*link.canonical_id, aliases);
                            if (res.model_id != model_id)
                                info.linked_models.insert(res.model_id);
                        }
                        break;
                    case LinkKind::hf_dataset:
                        if (link.canonical_id) info.datasets.insert(*link.canonical_id);
                        break;
                    case LinkKind::other:
                        break;
                }
            }
        }
        for (const auto& p : paper_ids) info.papers.insert(p);
        for (const auto& ds : info.datasets) dataset_to_models[ds].insert(model_id);
        build.models.push_back(info);

        // 1. tables embedded in the card itself
        std::vector<std::vector<std::string>> fn;
        auto card_tables = extract_markdown_tables(doc.body, &fn);
        for (std::size_t i = 0; i < card_tables.size(); ++i)
            add_table(card_tables[i], SourceKind::model_card, doc.doc_id, model_id, doc.body,
                      fn[i]);

        // 2. tables from referenced papers (arXiv HTML, then S2 text)
        std::vector<std::string> seen_papers;
        for (const auto& p : paper_ids) {
            if (std::find(seen_papers.begin(), seen_papers.end(), p) != seen_papers.end())
                continue;
            seen_papers.push_back(p);
            std::string stem = entity_to_doc_stem(p);
            bool found = false;
            if (auto it = by_key.find("arxiv_html/" + stem + ".html"); it != by_key.end()) {
                found = true;
                for (auto& t : extract_html_tables(it->second->body, &build.stats))
                    add_table(t, SourceKind::arxiv_html, it->second->doc_id, model_id,
                              t.caption, {});
            }
            if (auto it = by_key.find("s2_text/" + stem + ".txt"); it != by_key.end()) {
                found = true;
                if (auto t = recover_text_table(it->second->body, *recoverer, &build.stats)) {
                    t->origin.position = 0;
                    add_table(*t, SourceKind::s2_text, it->second->doc_id, model_id, "", {});
                }
            }
            if (!found) ++build.stats.missing_referenced_docs;
        }

        // 3. tables from referenced GitHub READMEs
        std::vector<std::string> seen_repos;
        for (const auto& g : github_repos) {
            if (std::find(seen_repos.begin(), seen_repos.end(), g) != seen_repos.end())
                continue;
            seen_repos.push_back(g);
            auto it = by_key.find("github_readme/" + entity_to_doc_stem(g) + ".md");
            if (it == by_key.end()) {
                ++build.stats.missing_referenced_docs;
                continue;
            }
            std::vector<std::vector<std::string>> gfn;
            auto gh_tables = extract_markdown_tables(it->second->body, &gfn);
            for (std::size_t i = 0; i < gh_tables.size(); ++i)
                add_table(gh_tables[i], SourceKind::github_readme, it->second->doc_id, model_id,
                          it->second->body, gfn[i]);
        }
    }

    // dataset-card tables attach to every model referencing the dataset
    for (const auto& doc : docs) {
        if (doc.source_kind != SourceKind::dataset_card) continue;
        std::string dataset_id = doc_id_to_entity(doc.doc_id);
        auto mit = dataset_to_models.find(dataset_id);
        std::vector<std::vector<std::string>> fn;
        auto tables = extract_markdown_tables(doc.body, &fn);
        if (mit == dataset_to_models.end() || mit->second.empty()) {
            build.stats.orphan_tables += tables.size();
            continue;
        }
        for (std::size_t i = 0; i < tables.size(); ++i)
            for (const auto& m : mit->second)
                add_table(tables[i], SourceKind::dataset_card, doc.doc_id, m, doc.body, fn[i]);
    }

    return build;
}

}  // namespace mtab
