#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "mtab/table.hpp"

namespace mtab {

enum class AugmentVariant { transpose, header_to_cell, shuffle_col, shuffle_row, drop_cell };

const char* augment_variant_name(AugmentVariant v);
std::optional<AugmentVariant> augment_variant_from_name(const std::string& name);

struct AugmentedTable {
    std::string base_id;  // table_id of the origin table
    AugmentVariant variant = AugmentVariant::transpose;
    Grid cells;
    int header_row_count = 0;
    std::string caption;
    std::optional<std::uint64_t> seed;  // set for stochastic variants
};

// Pure grid transpose; no label-column detection. The first output row is the
// former first column.
AugmentedTable transpose(const CanonicalTable& t);

// Each body cell v under header h becomes "h: v"; header rows unchanged.
// Throws std::invalid_argument when the table has no header row.
AugmentedTable header_to_cell(const CanonicalTable& t);

// Seeded column permutation (splitmix64); headers move with their columns.
AugmentedTable shuffle_columns(const CanonicalTable& t, std::uint64_t seed);

// Seeded body-row permutation; header rows never move.
AugmentedTable shuffle_rows(const CanonicalTable& t, std::uint64_t seed);

// Blanks each body cell independently with probability `rate` under the
// seeded generator. rate must be in [0, 1).
AugmentedTable drop_cells(const CanonicalTable& t, double rate, std::uint64_t seed);

// Strips the "h: " prefix written by header_to_cell; exact inverse on its
// output.
Grid strip_header_prefix(const Grid& cells, int header_row_count);

}  // namespace mtab
