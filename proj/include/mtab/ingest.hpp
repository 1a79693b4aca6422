#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtab/table.hpp"

namespace mtab {

struct SourceDocument {
    std::string doc_id;
    SourceKind source_kind = SourceKind::model_card;
    std::string uri;
    std::string body;  // non-empty after load
};

enum class LinkKind { arxiv_paper, github_repo, hf_model, hf_dataset, bibtex_title, other };

const char* link_kind_name(LinkKind k);

struct LinkRef {
    std::string raw;
    LinkKind kind = LinkKind::other;
    std::optional<std::string> canonical_id;

    bool operator==(const LinkRef&) const = default;
};

struct SnapshotStats {
    std::size_t loaded = 0;
    std::size_t skipped_empty = 0;
    std::size_t skipped_unreadable = 0;
    std::size_t malformed_bibtex = 0;
};

// Hugging Face template cards ship with this placeholder citation; it never
// counts as a paper link.
inline constexpr const char* kPlaceholderArxivId = "1910.09700";

// Loads every readable document under the snapshot layout
// (<root>/model_cards, dataset_cards, github, arxiv, s2), in lexicographic
// path order. Empty files are dropped and counted. Missing root is fatal.
std::vector<SourceDocument> load_snapshot(const std::filesystem::path& root,
                                          SnapshotStats* stats = nullptr);

// All URLs (scheme-anchored) and BibTeX titles in order of first appearance,
// duplicates collapsed to the first occurrence.
std::vector<LinkRef> extract_links(const std::string& body, SnapshotStats* stats = nullptr);

// Fills kind and canonical_id from host/path patterns. Idempotent; anything
// unrecognized falls back to LinkKind::other.
LinkRef classify_link(LinkRef ref);

struct AliasCandidate {
    std::string canonical_id;
    std::int64_t download_count = 0;
};
using AliasTable = std::map<std::string, std::vector<AliasCandidate>>;

AliasTable load_alias_table(const std::filesystem::path& tsv_path);

struct AliasResolution {
    std::string model_id;
    bool resolved = true;  // false: unknown shorthand kept verbatim
};

// Shorthands resolve to the candidate with the highest download count, ties
// broken by lexicographically smallest canonical id. Canonical ids (with a
// '/') pass through.
AliasResolution resolve_model_alias(const std::string& name, const AliasTable& aliases);

}  // namespace mtab
