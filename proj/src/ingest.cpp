#include "mtab/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mtab/util.hpp"

namespace fs = std::filesystem;

namespace mtab {

const char* link_kind_name(LinkKind k) {
    switch (k) {
        case LinkKind::arxiv_paper: return "arxiv_paper";
        case LinkKind::github_repo: return "github_repo";
        case LinkKind::hf_model: return "hf_model";
        case LinkKind::hf_dataset: return "hf_dataset";
        case LinkKind::bibtex_title: return "bibtex_title";
        case LinkKind::other: return "other";
    }
    return "other";
}

namespace {

struct SubdirSpec {
    const char* name;
    SourceKind kind;
};

constexpr SubdirSpec kSubdirs[] = {
    {"arxiv", SourceKind::arxiv_html},
    {"dataset_cards", SourceKind::dataset_card},
    {"github", SourceKind::github_readme},
    {"model_cards", SourceKind::model_card},
    {"s2", SourceKind::s2_text},
};

}  // namespace

std::vector<SourceDocument> load_snapshot(const fs::path& root, SnapshotStats* stats) {
    if (!fs::is_directory(root))
        throw std::runtime_error("snapshot directory not found: " + root.string());

    struct Entry {
        std::string rel;
        fs::path path;
        SourceKind kind;
    };
    std::vector<Entry> entries;
    for (const auto& sub : kSubdirs) {
        fs::path dir = root / sub.name;
        if (!fs::is_directory(dir)) continue;
        for (const auto& de : fs::directory_iterator(dir)) {
            if (!de.is_regular_file()) continue;
            entries.push_back({std::string(sub.name) + "/" + de.path().filename().string(),
                               de.path(), sub.kind});
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.rel < b.rel; });

    std::vector<SourceDocument> docs;
    for (const auto& e : entries) {
        std::ifstream in(e.path, std::ios::binary);
        if (!in) {
            if (stats) ++stats->skipped_unreadable;
            continue;
        }
        std::ostringstream body;
        body << in.rdbuf();
        std::string text = body.str();
        if (text.empty()) {
            if (stats) ++stats->skipped_empty;
            continue;
        }
        SourceDocument doc;
        doc.doc_id = e.path.filename().string();
        doc.source_kind = e.kind;
        doc.uri = e.rel;
        doc.body = std::move(text);
        docs.push_back(std::move(doc));
        if (stats) ++stats->loaded;
    }
    return docs;
}

namespace {

bool is_url_terminator(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == ')' || c == ']' || c == '}' ||
           c == '>' || c == '<' || c == '"' || c == '\'' || c == '`';
}

std::string strip_trailing_punct(std::string url) {
    while (!url.empty()) {
        char c = url.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?')
            url.pop_back();
        else
            break;
    }
    return url;
}

// Extracts title fields from BibTeX entries. Entries with unbalanced braces
// or no title are counted as malformed.
void extract_bibtex_titles(const std::string& body, std::vector<std::string>& titles,
                           SnapshotStats* stats) {
    std::size_t pos = 0;
    while ((pos = body.find('@', pos)) != std::string::npos) {
        std::size_t brace = pos + 1;
        while (brace < body.size() &&
               (std::isalpha(static_cast<unsigned char>(body[brace])) || body[brace] == '_'))
            ++brace;
        if (brace == pos + 1 || brace >= body.size() || body[brace] != '{') {
            ++pos;
            continue;
        }
        int depth = 0;
        std::size_t end = brace;
        for (; end < body.size(); ++end) {
            if (body[end] == '{') ++depth;
            else if (body[end] == '}' && --depth == 0) break;
        }
        if (depth != 0) {
            if (stats) ++stats->malformed_bibtex;
            pos = brace + 1;
            continue;
        }
        std::string entry = body.substr(brace, end - brace + 1);
        std::string lower = to_lower(entry);
        std::size_t tpos = 0;
        std::string title;
        while ((tpos = lower.find("title", tpos)) != std::string::npos) {
            // reject booktitle / subtitle etc.
            if (tpos > 0 && (std::isalnum(static_cast<unsigned char>(lower[tpos - 1])))) {
                tpos += 5;
                continue;
            }
            std::size_t eq = entry.find_first_not_of(" \t\r\n", tpos + 5);
            if (eq == std::string::npos || entry[eq] != '=') {
                tpos += 5;
                continue;
            }
            std::size_t v = entry.find_first_not_of(" \t\r\n", eq + 1);
            if (v == std::string::npos) break;
            if (entry[v] == '{') {
                int d = 0;
                std::size_t ve = v;
                for (; ve < entry.size(); ++ve) {
                    if (entry[ve] == '{') ++d;
                    else if (entry[ve] == '}' && --d == 0) break;
                }
                if (ve < entry.size()) title = entry.substr(v + 1, ve - v - 1);
            } else if (entry[v] == '"') {
                std::size_t ve = entry.find('"', v + 1);
                if (ve != std::string::npos) title = entry.substr(v + 1, ve - v - 1);
            }
            break;
        }
        title = collapse_ws(title);
        if (title.empty()) {
            if (stats) ++stats->malformed_bibtex;
        } else {
            titles.push_back(title);
        }
        pos = end + 1;
    }
}

}  // namespace

std::vector<LinkRef> extract_links(const std::string& body, SnapshotStats* stats) {
    std::vector<LinkRef> out;
    std::vector<std::string> seen;
    auto emit = [&](const std::string& raw, LinkKind kind) {
        if (std::find(seen.begin(), seen.end(), raw) != seen.end()) return;
        seen.push_back(raw);
        LinkRef ref;
        ref.raw = raw;
        ref.kind = kind;
        out.push_back(std::move(ref));
    };

    std::size_t pos = 0;
    while ((pos = body.find("http", pos)) != std::string::npos) {
        std::size_t scheme_end;
        if (body.compare(pos, 8, "https://") == 0) scheme_end = pos + 8;
        else if (body.compare(pos, 7, "http://") == 0) scheme_end = pos + 7;
        else {
            ++pos;
            continue;
        }
        std::size_t end = scheme_end;
        while (end < body.size() && !is_url_terminator(body[end])) ++end;
        std::string url = strip_trailing_punct(body.substr(pos, end - pos));
        if (url.size() > scheme_end - pos) emit(url, LinkKind::other);
        pos = end;
    }

    std::vector<std::string> titles;
    extract_bibtex_titles(body, titles, stats);
    for (const auto& t : titles) emit(t, LinkKind::bibtex_title);
    return out;
}

namespace {

std::vector<std::string> split_path_segments(std::string_view path) {
    std::vector<std::string> segs;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        std::size_t j = path.find_first_of("/?#", i);
        if (j == std::string_view::npos) j = path.size();
        segs.emplace_back(path.substr(i, j - i));
        if (j < path.size() && path[j] != '/') break;  // query/fragment ends the path
        i = j;
    }
    return segs;
}

std::string normalize_arxiv_id(std::string id) {
    if (starts_with(id, "arxiv.") || starts_with(id, "arXiv.")) id = id.substr(6);
    if (id.size() > 4 && id.compare(id.size() - 4, 4, ".pdf") == 0) id.resize(id.size() - 4);
    // strip version suffix vN
    std::size_t v = id.rfind('v');
    if (v != std::string::npos && v + 1 < id.size() &&
        std::all_of(id.begin() + static_cast<long>(v) + 1, id.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        id.resize(v);
    return id;
}

}  // namespace

LinkRef classify_link(LinkRef ref) {
    if (ref.kind == LinkKind::bibtex_title) {
        ref.canonical_id = collapse_ws(ref.raw);
        return ref;
    }
    std::string url = ref.raw;
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        ref.kind = LinkKind::other;
        ref.canonical_id.reset();
        return ref;
    }
    std::size_t host_begin = scheme + 3;
    std::size_t host_end = url.find_first_of("/?#", host_begin);
    if (host_end == std::string::npos) host_end = url.size();
    std::string host = to_lower(url.substr(host_begin, host_end - host_begin));
    if (starts_with(host, "www.")) host = host.substr(4);
    std::vector<std::string> segs = split_path_segments(
        std::string_view(url).substr(host_end));

    ref.kind = LinkKind::other;
    ref.canonical_id.reset();

    if (host == "arxiv.org" || host == "export.arxiv.org") {
        if (segs.size() >= 2 && (segs[0] == "abs" || segs[0] == "pdf" || segs[0] == "html")) {
            // old-style ids span two segments (cs/9901001)
            std::string id = segs.size() >= 3 ? segs[1] + "/" + segs[2] : segs[1];
            id = normalize_arxiv_id(id);
            if (id != kPlaceholderArxivId && !id.empty()) {
                ref.kind = LinkKind::arxiv_paper;
                ref.canonical_id = id;
            }
        }
    } else if (host == "github.com") {
        if (segs.size() >= 2) {
            std::string repo = segs[1];
            if (repo.size() > 4 && repo.compare(repo.size() - 4, 4, ".git") == 0)
                repo.resize(repo.size() - 4);
            ref.kind = LinkKind::github_repo;
            ref.canonical_id = segs[0] + "/" + repo;
        }
    } else if (host == "huggingface.co" || host == "hf.co") {
        if (!segs.empty() && segs[0] == "datasets") {
            if (segs.size() >= 3) {
                ref.kind = LinkKind::hf_dataset;
                ref.canonical_id = segs[1] + "/" + segs[2];
            } else if (segs.size() == 2) {
                ref.kind = LinkKind::hf_dataset;
                ref.canonical_id = segs[1];
            }
        } else if (!segs.empty() && (segs[0] == "spaces" || segs[0] == "templates" ||
                                     segs[0] == "docs" || segs[0] == "blog")) {
            // not a model card
        } else if (segs.size() == 1) {
            ref.kind = LinkKind::hf_model;
            ref.canonical_id = segs[0];  // shorthand; alias resolution applies
        } else if (segs.size() >= 2) {
            ref.kind = LinkKind::hf_model;
            ref.canonical_id = segs[0] + "/" + segs[1];
        }
    }
    return ref;
}

AliasTable load_alias_table(const fs::path& tsv_path) {
    AliasTable table;
    std::ifstream in(tsv_path);
    if (!in) return table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string shorthand, canonical, count;
        if (!std::getline(row, shorthand, '\t') || !std::getline(row, canonical, '\t'))
            continue;
        std::getline(row, count, '\t');
        AliasCandidate cand;
        cand.canonical_id = canonical;
        cand.download_count = count.empty() ? 0 : std::stoll(count);
        table[shorthand].push_back(std::move(cand));
    }
    return table;
}

AliasResolution resolve_model_alias(const std::string& name, const AliasTable& aliases) {
    if (name.find('/') != std::string::npos) return {name, true};
    auto it = aliases.find(name);
    if (it == aliases.end() || it->second.empty()) return {name, false};
    const AliasCandidate* best = &it->second.front();
    for (const auto& cand : it->second) {
        if (cand.download_count > best->download_count ||
            (cand.download_count == best->download_count &&
             cand.canonical_id < best->canonical_id))
            best = &cand;
    }
    return {best->canonical_id, true};
}

}  // namespace mtab
