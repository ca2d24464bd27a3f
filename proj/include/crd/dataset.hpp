#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crd {

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ColumnKind { Categorical, Numeric };
enum class Role { Actionable, Control, Target };

// Label used for missing categorical cells (empty cells become their own
// observed category under MissingPolicy::Keep).
inline constexpr const char* kMissingLabel = "?";

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Categorical;
    Role role = Role::Actionable;
    // Categorical storage: per-row code into `labels`.
    std::vector<int32_t> codes;
    std::vector<std::string> labels;
    // Numeric storage: per-row value, NaN marks a missing cell.
    std::vector<double> values;

    std::optional<int32_t> code_of(const std::string& label) const;
};

struct SchemaField {
    std::string name;
    ColumnKind kind;
    Role role;
};

enum class MissingPolicy { Keep, Drop };

struct RoleSpec {
    std::string target;
    std::vector<std::string> actionable;
    std::vector<std::string> control;
};

class Dataset {
public:
    Dataset(std::vector<Column> columns, std::size_t rows);

    std::size_t row_count() const { return rows_; }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t i) const { return columns_.at(i); }
    std::size_t column_count() const { return columns_.size(); }

    int column_index(const std::string& name) const;  // -1 when absent
    int target_index() const { return target_; }

    std::vector<int> actionable_indices() const;
    std::vector<int> control_indices() const;
    std::vector<SchemaField> schema() const;

    // Rows removed by MissingPolicy::Drop (0 otherwise).
    std::size_t dropped_rows = 0;

private:
    std::vector<Column> columns_;
    std::size_t rows_ = 0;
    int target_ = -1;
};

// Reads an RFC-4180 CSV (header row, comma separator, optional quoting) and
// assigns roles. Columns absent from the role spec are dropped. Kind is
// inferred: a column is numeric when every non-missing cell parses as a
// finite number.
Dataset ingest_csv(const std::string& path, const RoleSpec& roles,
                   MissingPolicy missing = MissingPolicy::Keep);

// Same, but from in-memory cells (first row is not a header).
Dataset ingest_rows(const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows,
                    const RoleSpec& roles, MissingPolicy missing = MissingPolicy::Keep);

struct BinnedColumn {
    int column = -1;                 // dataset column index (-1 for detached use)
    std::vector<double> cut_points;  // strictly increasing interior thresholds
    int max_bins = 0;

    // Bin index of a value: number of cut points < ... i.e. first bin whose
    // upper cut is >= v. NaN maps to -1 (no bin).
    int bin_of(double v) const;
    int bin_count() const { return static_cast<int>(cut_points.size()) + 1; }
};

// Equi-frequency cut points at empirical quantiles i/max_bins, with duplicate
// cuts merged. Columns with at most max_bins distinct values keep every
// distinct value as its own bin. NaNs are ignored.
BinnedColumn discretize(std::span<const double> values, int max_bins);

struct StratumIndex {
    std::vector<int32_t> stratum_of_row;  // index into sizes/keys
    std::vector<uint32_t> sizes;          // n_z per stratum, sums to N
    std::vector<std::string> keys;        // rendered control tuple, for reports

    std::size_t stratum_count() const { return sizes.size(); }
};

// One stratum per distinct observed control-value tuple; numeric control
// columns are discretized (same equi-frequency procedure) before grouping.
// With no control columns the whole dataset is a single stratum.
StratumIndex build_stratum_index(const Dataset& ds, int max_bins = 8);

}  // namespace crd
