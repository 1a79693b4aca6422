#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtab/augment.hpp"
#include "mtab/quality.hpp"

namespace mtab {

inline constexpr const char* kToolVersion = "0.1.0";

// --- canonical corpus file ---------------------------------------------------

void save_corpus_jsonl(const std::filesystem::path& path,
                       const std::vector<CorpusRecord>& corpus);
std::vector<CorpusRecord> load_corpus_jsonl(const std::filesystem::path& path);

void save_frequencies_tsv(const std::filesystem::path& path,
                          const std::map<std::string, std::size_t>& frequencies);
std::map<std::string, std::size_t> load_frequencies_tsv(const std::filesystem::path& path);

// Intermediate (pre-dedup) entries, private to the pipeline: full extraction
// state including origins, contexts, and trailing footnote lines.
void save_entries_jsonl(const std::filesystem::path& path,
                        const std::vector<CorpusEntry>& entries);
std::vector<CorpusEntry> load_entries_jsonl(const std::filesystem::path& path);

// Augmented corpus: canonical format plus base_id, variant, seed.
void save_augmented_jsonl(const std::filesystem::path& path,
                          const std::vector<AugmentedTable>& tables);
std::vector<AugmentedTable> load_augmented_jsonl(const std::filesystem::path& path);

// --- config ------------------------------------------------------------------

// Flat key = value file (TOML subset): '#' comments, optional double quotes,
// no sections. Unknown keys are kept; flags override config at the CLI layer.
class Config {
public:
    static Config from_file(const std::filesystem::path& path);
    static Config from_text(const std::string& text);

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    void set(const std::string& key, std::string value);

    const std::map<std::string, std::string>& entries() const { return entries_; }
    std::string content_hash() const;  // order-independent

private:
    std::map<std::string, std::string> entries_;
};

// --- manifest ----------------------------------------------------------------

struct StageRecord {
    std::map<std::string, std::string> outputs;  // path (workspace-relative) -> content hash
    std::string input_hash;                      // combined hash of declared inputs
    std::string config_hash;
};

// Stage bookkeeping; a stage re-runs only when its input or config hash
// changed or --force is given. Saves are atomic (write temp, rename).
struct WorkspaceManifest {
    std::string tool_version = kToolVersion;
    std::map<std::string, StageRecord> stages;

    static WorkspaceManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool up_to_date(const std::string& stage, const std::string& input_hash,
                    const std::string& config_hash) const;
    void record(const std::string& stage, StageRecord rec);
};

std::string hash_file(const std::filesystem::path& path);
std::string hash_files(const std::vector<std::filesystem::path>& paths);

// RAII advisory lock: one command invocation owns the workspace.
class WorkspaceLock {
public:
    explicit WorkspaceLock(const std::filesystem::path& workspace);
    ~WorkspaceLock();
    WorkspaceLock(const WorkspaceLock&) = delete;
    WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
    std::filesystem::path lock_path_;
    bool owned_ = false;
};

void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace mtab
