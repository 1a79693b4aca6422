#include "mtab/augment.hpp"

#include "mtab/util.hpp"

namespace mtab {

const char* augment_variant_name(AugmentVariant v) {
    switch (v) {
        case AugmentVariant::transpose: return "transpose";
        case AugmentVariant::header_to_cell: return "header2cell";
        case AugmentVariant::shuffle_col: return "shufflecol";
        case AugmentVariant::shuffle_row: return "shufflerow";
        case AugmentVariant::drop_cell: return "dropcell";
    }
    return "transpose";
}

std::optional<AugmentVariant> augment_variant_from_name(const std::string& name) {
    if (name == "transpose") return AugmentVariant::transpose;
    if (name == "header2cell") return AugmentVariant::header_to_cell;
    if (name == "shufflecol") return AugmentVariant::shuffle_col;
    if (name == "shufflerow") return AugmentVariant::shuffle_row;
    if (name == "dropcell") return AugmentVariant::drop_cell;
    return std::nullopt;
}

namespace {

AugmentedTable base_variant(const CanonicalTable& t, AugmentVariant v) {
    AugmentedTable a;
    a.base_id = t.table_id;
    a.variant = v;
    a.cells = t.cells;
    a.header_row_count = t.header_row_count;
    a.caption = t.caption;
    return a;
}

// The effective stream is keyed on (base_id, variant, seed) so each variant
// of each table draws independently.
SplitMix64 variant_rng(const AugmentedTable& a, std::uint64_t seed) {
    std::uint64_t key = fnv1a64(a.base_id);
    key = fnv1a64(augment_variant_name(a.variant), key);
    return SplitMix64(key ^ seed);
}

}  // namespace

AugmentedTable transpose(const CanonicalTable& t) {
    AugmentedTable a = base_variant(t, AugmentVariant::transpose);
    std::size_t rows = t.cells.size();
    std::size_t cols = rows == 0 ? 0 : t.cells.front().size();
    Grid out(cols, std::vector<std::string>(rows));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c][r] = t.cells[r][c];
    a.cells = std::move(out);
    a.header_row_count = t.header_row_count >= 1 ? 1 : 0;
    return a;
}

AugmentedTable header_to_cell(const CanonicalTable& t) {
    if (t.header_row_count < 1)
        throw std::invalid_argument("header_to_cell: table has no header row");
    AugmentedTable a = base_variant(t, AugmentVariant::header_to_cell);
    const auto& header = t.cells.front();
    for (std::size_t r = static_cast<std::size_t>(t.header_row_count); r < a.cells.size(); ++r)
        for (std::size_t c = 0; c < a.cells[r].size(); ++c)
            a.cells[r][c] = header[c] + ": " + a.cells[r][c];
    return a;
}

Grid strip_header_prefix(const Grid& cells, int header_row_count) {
    Grid out = cells;
    if (header_row_count < 1 || cells.empty()) return out;
    const auto& header = cells.front();
    for (std::size_t r = static_cast<std::size_t>(header_row_count); r < out.size(); ++r) {
        for (std::size_t c = 0; c < out[r].size(); ++c) {
            std::string prefix = header[c] + ": ";
            if (starts_with(out[r][c], prefix)) out[r][c] = out[r][c].substr(prefix.size());
        }
    }
    return out;
}

AugmentedTable shuffle_columns(const CanonicalTable& t, std::uint64_t seed) {
    AugmentedTable a = base_variant(t, AugmentVariant::shuffle_col);
    a.seed = seed;
    auto rng = variant_rng(a, seed);
    std::size_t cols = t.cells.empty() ? 0 : t.cells.front().size();
    auto perm = rng.permutation(cols);
    for (std::size_t r = 0; r < a.cells.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c) a.cells[r][c] = t.cells[r][perm[c]];
    return a;
}

AugmentedTable shuffle_rows(const CanonicalTable& t, std::uint64_t seed) {
    AugmentedTable a = base_variant(t, AugmentVariant::shuffle_row);
    a.seed = seed;
    auto rng = variant_rng(a, seed);
    std::size_t head = static_cast<std::size_t>(t.header_row_count);
    std::size_t body = t.cells.size() > head ? t.cells.size() - head : 0;
    auto perm = rng.permutation(body);
    for (std::size_t r = 0; r < body; ++r) a.cells[head + r] = t.cells[head + perm[r]];
    return a;
}

AugmentedTable drop_cells(const CanonicalTable& t, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("drop_cells: rate not in [0,1)");
    AugmentedTable a = base_variant(t, AugmentVariant::drop_cell);
    a.seed = seed;
    auto rng = variant_rng(a, seed);
    std::size_t head = static_cast<std::size_t>(t.header_row_count);
    for (std::size_t r = head; r < a.cells.size(); ++r)
        for (auto& cell : a.cells[r])
            if (rng.next_unit() < rate) cell.clear();
    return a;
}

}  // namespace mtab
