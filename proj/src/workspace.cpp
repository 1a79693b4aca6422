#include "mtab/workspace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mtab/util.hpp"

namespace mtab {

using ordered_json = nlohmann::ordered_json;

void save_corpus_jsonl(const std::filesystem::path& path,
                       const std::vector<CorpusRecord>& corpus) {
    std::ostringstream out;
    for (const auto& rec : corpus) {
        ordered_json row;
        row["table_id"] = rec.table.table_id;
        std::vector<std::string> kinds;
        for (SourceKind k : rec.source_kinds) kinds.push_back(source_kind_name(k));
        row["source_kinds"] = kinds;
        row["model_ids"] = rec.model_ids;
        row["caption"] = rec.table.caption;
        row["context_text"] = rec.context_text;
        row["header_row_count"] = rec.table.header_row_count;
        row["n_rows"] = rec.table.n_rows;
        row["n_cols"] = rec.table.n_cols;
        row["cells"] = rec.table.cells;
        out << row.dump() << "\n";
    }
    atomic_write(path, out.str());
}

std::vector<CorpusRecord> load_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus: " + path.string());
    std::vector<CorpusRecord> corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ordered_json row = ordered_json::parse(line);
        CorpusRecord rec;
        rec.table.table_id = row.at("table_id").get<std::string>();
        for (const auto& k : row.at("source_kinds")) {
            auto kind = source_kind_from_name(k.get<std::string>());
            if (!kind) throw std::runtime_error("unknown source kind in corpus file");
            rec.source_kinds.push_back(*kind);
        }
        rec.model_ids = row.at("model_ids").get<std::vector<std::string>>();
        rec.table.caption = row.at("caption").get<std::string>();
        rec.context_text = row.at("context_text").get<std::string>();
        rec.table.header_row_count = row.at("header_row_count").get<int>();
        rec.table.n_rows = row.at("n_rows").get<std::size_t>();
        rec.table.n_cols = row.at("n_cols").get<std::size_t>();
        rec.table.cells = row.at("cells").get<Grid>();
        corpus.push_back(std::move(rec));
    }
    return corpus;
}

void save_frequencies_tsv(const std::filesystem::path& path,
                          const std::map<std::string, std::size_t>& frequencies) {
    std::ostringstream out;
    for (const auto& [id, count] : frequencies) out << id << "\t" << count << "\n";
    atomic_write(path, out.str());
}

std::map<std::string, std::size_t> load_frequencies_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open frequency map: " + path.string());
    std::map<std::string, std::size_t> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) continue;
        out[line.substr(0, tab)] = std::stoull(line.substr(tab + 1));
    }
    return out;
}

void save_entries_jsonl(const std::filesystem::path& path,
                        const std::vector<CorpusEntry>& entries) {
    std::ostringstream out;
    for (const auto& e : entries) {
        ordered_json row;
        row["doc_id"] = e.table.origin.doc_id;
        row["position"] = e.table.origin.position;
        row["source_kind"] = source_kind_name(e.table.source_kind);
        row["caption"] = e.table.caption;
        row["header_row_count"] = e.table.header_row_count;
        row["cells"] = e.table.cells;
        row["model_ids"] = std::vector<std::string>(e.model_ids.begin(), e.model_ids.end());
        ordered_json contexts = ordered_json::array();
        for (const auto& c : e.contexts) {
            contexts.push_back({{"doc_id", c.origin.doc_id},
                                {"position", c.origin.position},
                                {"kind", source_kind_name(c.kind)},
                                {"text", c.text}});
        }
        row["contexts"] = contexts;
        row["footnote_lines"] = e.footnote_lines;
        out << row.dump() << "\n";
    }
    atomic_write(path, out.str());
}

std::vector<CorpusEntry> load_entries_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open entries: " + path.string());
    std::vector<CorpusEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ordered_json row = ordered_json::parse(line);
        CorpusEntry e;
        e.table.origin.doc_id = row.at("doc_id").get<std::string>();
        e.table.origin.position = row.at("position").get<int>();
        auto kind = source_kind_from_name(row.at("source_kind").get<std::string>());
        if (!kind) throw std::runtime_error("unknown source kind in entries file");
        e.table.source_kind = *kind;
        e.table.caption = row.at("caption").get<std::string>();
        e.table.header_row_count = row.at("header_row_count").get<int>();
        e.table.cells = row.at("cells").get<Grid>();
        for (const auto& id : row.at("model_ids")) e.model_ids.insert(id.get<std::string>());
        for (const auto& c : row.at("contexts")) {
            SourceContext ctx;
            ctx.origin.doc_id = c.at("doc_id").get<std::string>();
            ctx.origin.position = c.at("position").get<int>();
            auto ck = source_kind_from_name(c.at("kind").get<std::string>());
            if (!ck) throw std::runtime_error("unknown source kind in entries file");
            ctx.kind = *ck;
            ctx.text = c.at("text").get<std::string>();
            e.contexts.push_back(std::move(ctx));
        }
        e.footnote_lines = row.at("footnote_lines").get<std::vector<std::string>>();
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_augmented_jsonl(const std::filesystem::path& path,
                          const std::vector<AugmentedTable>& tables) {
    std::ostringstream out;
    for (const auto& t : tables) {
        ordered_json row;
        row["base_id"] = t.base_id;
        row["variant"] = augment_variant_name(t.variant);
        if (t.seed)
            row["seed"] = *t.seed;
        else
            row["seed"] = nullptr;
        row["caption"] = t.caption;
        row["header_row_count"] = t.header_row_count;
        row["cells"] = t.cells;
        out << row.dump() << "\n";
    }
    atomic_write(path, out.str());
}

std::vector<AugmentedTable> load_augmented_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open augmented corpus: " + path.string());
    std::vector<AugmentedTable> tables;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ordered_json row = ordered_json::parse(line);
        AugmentedTable t;
        t.base_id = row.at("base_id").get<std::string>();
        auto variant = augment_variant_from_name(row.at("variant").get<std::string>());
        if (!variant) throw std::runtime_error("unknown augment variant");
        t.variant = *variant;
        if (!row.at("seed").is_null()) t.seed = row.at("seed").get<std::uint64_t>();
        t.caption = row.at("caption").get<std::string>();
        t.header_row_count = row.at("header_row_count").get<int>();
        t.cells = row.at("cells").get<Grid>();
        tables.push_back(std::move(t));
    }
    return tables;
}

// --- config ------------------------------------------------------------------

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

Config Config::from_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line without '=': " + s);
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        cfg.entries_[key] = value;
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : std::stoll(it->second);
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : std::stod(it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return it->second == "true" || it->second == "1" || it->second == "yes";
}

void Config::set(const std::string& key, std::string value) {
    entries_[key] = std::move(value);
}

std::string Config::content_hash() const {
    std::uint64_t h = fnv1a64("mtab.config.v1");
    for (const auto& [k, v] : entries_) {  // std::map iterates sorted
        h = fnv1a64(k, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(v, h);
        h = fnv1a64("\x1e", h);
    }
    return to_hex16(h);
}

// --- manifest ----------------------------------------------------------------

WorkspaceManifest WorkspaceManifest::load(const std::filesystem::path& path) {
    WorkspaceManifest m;
    std::ifstream in(path);
    if (!in) return m;  // fresh workspace
    ordered_json doc = ordered_json::parse(in);
    m.tool_version = doc.value("tool_version", std::string(kToolVersion));
    if (doc.contains("stages")) {
        for (auto& [name, rec] : doc["stages"].items()) {
            StageRecord sr;
            if (rec.contains("outputs"))
                sr.outputs = rec["outputs"].get<std::map<std::string, std::string>>();
            sr.input_hash = rec.value("input_hash", "");
            sr.config_hash = rec.value("config_hash", "");
            m.stages[name] = std::move(sr);
        }
    }
    return m;
}

void WorkspaceManifest::save(const std::filesystem::path& path) const {
    ordered_json doc;
    doc["tool_version"] = tool_version;
    ordered_json stages_json = ordered_json::object();
    for (const auto& [name, rec] : stages) {
        ordered_json r;
        r["outputs"] = rec.outputs;
        r["input_hash"] = rec.input_hash;
        r["config_hash"] = rec.config_hash;
        stages_json[name] = r;
    }
    doc["stages"] = stages_json;
    atomic_write(path, doc.dump(2) + "\n");
}

bool WorkspaceManifest::up_to_date(const std::string& stage, const std::string& input_hash,
                                   const std::string& config_hash) const {
    auto it = stages.find(stage);
    if (it == stages.end()) return false;
    return it->second.input_hash == input_hash && it->second.config_hash == config_hash;
}

void WorkspaceManifest::record(const std::string& stage, StageRecord rec) {
    stages[stage] = std::move(rec);
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path.string());
    std::uint64_t h = fnv1a64("mtab.file.v1");
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (!in) break;
    }
    return to_hex16(h);
}

std::string hash_files(const std::vector<std::filesystem::path>& paths) {
    std::uint64_t h = fnv1a64("mtab.files.v1");
    for (const auto& p : paths) {
        h = fnv1a64(p.filename().string(), h);
        h = fnv1a64(hash_file(p), h);
    }
    return to_hex16(h);
}

WorkspaceLock::WorkspaceLock(const std::filesystem::path& workspace) {
    lock_path_ = workspace / ".lock";
    std::error_code ec;
    std::filesystem::create_directories(workspace, ec);
    if (std::filesystem::exists(lock_path_))
        throw std::runtime_error("workspace is locked: " + lock_path_.string());
    std::ofstream out(lock_path_);
    if (!out) throw std::runtime_error("cannot create lock: " + lock_path_.string());
    out << "pid unknown\n";
    owned_ = true;
}

WorkspaceLock::~WorkspaceLock() {
    if (owned_) {
        std::error_code ec;
        std::filesystem::remove(lock_path_, ec);
    }
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace mtab
