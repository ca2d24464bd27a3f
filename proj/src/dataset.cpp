#include "crd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace crd {

namespace {

// RFC-4180 reader: quoted fields, doubled quotes as escapes, CRLF or LF row
// separators, newlines allowed inside quoted fields.
std::vector<std::vector<std::string>> read_csv_records(std::istream& in, const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool record_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
        record_started = false;
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_started) {
                    in_quotes = true;
                    field_started = true;
                    record_started = true;
                } else {
                    field.push_back(c);  // stray quote inside unquoted field
                }
                break;
            case ',':
                end_field();
                record_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (record_started || field_started || !field.empty()) end_record();
                break;
            default:
                field.push_back(c);
                field_started = true;
                record_started = true;
        }
    }
    if (in_quotes) throw IngestError(origin + ": unterminated quoted field");
    if (record_started || field_started || !field.empty()) end_record();
    return records;
}

bool parse_number(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
    if (b == e) return false;
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc{} && ptr == e && std::isfinite(out);
}

bool cell_missing(const std::string& s) {
    return s.empty() || s == "?" || s == "NA";
}

std::string format_cut(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::optional<int32_t> Column::code_of(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) return std::nullopt;
    return static_cast<int32_t>(it - labels.begin());
}

Dataset::Dataset(std::vector<Column> columns, std::size_t rows)
    : columns_(std::move(columns)), rows_(rows) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const Column& col = columns_[i];
        if (!seen.insert(col.name).second)
            throw IngestError("duplicate column name '" + col.name + "'");
        if (col.role == Role::Target) {
            if (target_ >= 0) throw IngestError("more than one target column");
            target_ = static_cast<int>(i);
        }
        const std::size_t n = col.kind == ColumnKind::Numeric ? col.values.size() : col.codes.size();
        if (n != rows_)
            throw IngestError("column '" + col.name + "' has " + std::to_string(n) +
                              " cells, expected " + std::to_string(rows_));
    }
    if (target_ < 0) throw IngestError("no target column declared");
    if (actionable_indices().empty()) throw IngestError("no actionable column declared");
}

int Dataset::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<int> Dataset::actionable_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].role == Role::Actionable) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> Dataset::control_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].role == Role::Control) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<SchemaField> Dataset::schema() const {
    std::vector<SchemaField> out;
    out.reserve(columns_.size());
    for (const Column& c : columns_) out.push_back({c.name, c.kind, c.role});
    return out;
}

Dataset ingest_rows(const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows,
                    const RoleSpec& roles, MissingPolicy missing) {
    if (roles.target.empty()) throw IngestError("no target declared");

    std::unordered_map<std::string, Role> role_of;
    auto declare = [&](const std::string& name, Role r) {
        if (!role_of.emplace(name, r).second)
            throw IngestError("column '" + name + "' declared more than once in role spec");
    };
    declare(roles.target, Role::Target);
    for (const auto& n : roles.actionable) declare(n, Role::Actionable);
    for (const auto& n : roles.control) declare(n, Role::Control);

    std::unordered_map<std::string, int> header_pos;
    for (std::size_t i = 0; i < header.size(); ++i) header_pos.emplace(header[i], static_cast<int>(i));
    for (const auto& [name, r] : role_of)
        if (!header_pos.count(name)) throw IngestError("column '" + name + "' not present in header");

    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].size() != header.size())
            throw IngestError("row " + std::to_string(r + 2) + " has " + std::to_string(rows[r].size()) +
                              " fields, expected " + std::to_string(header.size()));

    // Kept columns in header order, selected by role spec.
    std::vector<int> kept;
    std::vector<Role> kept_role;
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto it = role_of.find(header[i]);
        if (it == role_of.end()) continue;
        kept.push_back(static_cast<int>(i));
        kept_role.push_back(it->second);
    }

    std::vector<char> keep_row(rows.size(), 1);
    std::size_t dropped = 0;
    if (missing == MissingPolicy::Drop) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (int src : kept) {
                if (cell_missing(rows[r][src])) {
                    keep_row[r] = 0;
                    ++dropped;
                    break;
                }
            }
        }
        if (dropped > 0)
            std::fprintf(stderr, "[ingest] dropped %zu row(s) with missing cells\n", dropped);
    }

    std::vector<Column> cols;
    cols.reserve(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const int src = kept[k];
        Column col;
        col.name = header[src];
        col.role = kept_role[k];

        bool numeric = true;
        bool any_value = false;
        double tmp;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!keep_row[r]) continue;
            const std::string& cell = rows[r][src];
            if (cell_missing(cell)) continue;
            any_value = true;
            if (!parse_number(cell, tmp)) {
                numeric = false;
                break;
            }
        }
        col.kind = (numeric && any_value) ? ColumnKind::Numeric : ColumnKind::Categorical;

        if (col.kind == ColumnKind::Numeric) {
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (!keep_row[r]) continue;
                const std::string& cell = rows[r][src];
                if (cell_missing(cell)) {
                    col.values.push_back(std::nan(""));
                } else {
                    parse_number(cell, tmp);
                    col.values.push_back(tmp);
                }
            }
        } else {
            std::unordered_map<std::string, int32_t> code;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (!keep_row[r]) continue;
                const std::string& cell = rows[r][src];
                const std::string label = cell_missing(cell) ? kMissingLabel : cell;
                auto [it, inserted] = code.emplace(label, static_cast<int32_t>(col.labels.size()));
                if (inserted) col.labels.push_back(label);
                col.codes.push_back(it->second);
            }
        }
        cols.push_back(std::move(col));
    }

    std::size_t n = rows.size() - dropped;
    Dataset ds(std::move(cols), n);
    ds.dropped_rows = dropped;
    return ds;
}

Dataset ingest_csv(const std::string& path, const RoleSpec& roles, MissingPolicy missing) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open '" + path + "'");
    auto records = read_csv_records(in, path);
    if (records.empty()) throw IngestError(path + ": no header row");
    std::vector<std::string> header = std::move(records.front());
    records.erase(records.begin());
    try {
        return ingest_rows(header, records, roles, missing);
    } catch (const IngestError& e) {
        throw IngestError(path + ": " + e.what());
    }
}

int BinnedColumn::bin_of(double v) const {
    if (std::isnan(v)) return -1;
    // cut_points are few (<= 63); linear scan beats binary search here.
    int b = 0;
    for (double c : cut_points) {
        if (v <= c) return b;
        ++b;
    }
    return b;
}

BinnedColumn discretize(std::span<const double> values, int max_bins) {
    if (max_bins < 2) throw std::invalid_argument("max_bins must be >= 2");
    BinnedColumn out;
    out.max_bins = max_bins;

    std::vector<double> sorted;
    sorted.reserve(values.size());
    for (double v : values)
        if (!std::isnan(v)) sorted.push_back(v);
    if (sorted.empty()) return out;
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> distinct;
    for (double v : sorted)
        if (distinct.empty() || v != distinct.back()) distinct.push_back(v);

    if (static_cast<int>(distinct.size()) <= max_bins) {
        // Few enough distinct values: each value is its own bin.
        out.cut_points.assign(distinct.begin(), distinct.end() - 1);
        return out;
    }

    const std::size_t m = sorted.size();
    for (int i = 1; i < max_bins; ++i) {
        const std::size_t idx = i * m / static_cast<std::size_t>(max_bins);
        if (idx == 0) continue;
        const double cut = sorted[idx - 1];
        if (cut == sorted.back()) continue;  // would leave an empty top bin
        if (!out.cut_points.empty() && cut == out.cut_points.back()) continue;
        out.cut_points.push_back(cut);
    }
    return out;
}

StratumIndex build_stratum_index(const Dataset& ds, int max_bins) {
    StratumIndex idx;
    const std::size_t n = ds.row_count();
    idx.stratum_of_row.assign(n, 0);

    const std::vector<int> controls = ds.control_indices();
    if (controls.empty()) {
        idx.sizes.assign(1, static_cast<uint32_t>(n));
        idx.keys.assign(1, "*");
        return idx;
    }

    // Per-row discrete code per control column (numeric controls binned).
    std::vector<std::vector<int32_t>> codes(controls.size());
    std::vector<std::vector<std::string>> names(controls.size());
    for (std::size_t c = 0; c < controls.size(); ++c) {
        const Column& col = ds.column(controls[c]);
        if (col.kind == ColumnKind::Categorical) {
            codes[c] = col.codes;
            names[c] = col.labels;
        } else {
            BinnedColumn bins = discretize(col.values, max_bins);
            codes[c].resize(n);
            for (std::size_t r = 0; r < n; ++r) codes[c][r] = bins.bin_of(col.values[r]);
            for (int b = 0; b < bins.bin_count(); ++b) {
                if (b < static_cast<int>(bins.cut_points.size()))
                    names[c].push_back("<=" + format_cut(bins.cut_points[b]));
                else if (!bins.cut_points.empty())
                    names[c].push_back(">" + format_cut(bins.cut_points.back()));
                else
                    names[c].push_back("*");
            }
        }
    }

    std::map<std::vector<int32_t>, int32_t> groups;
    std::vector<int32_t> key(controls.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < controls.size(); ++c) key[c] = codes[c][r];
        auto [it, inserted] = groups.emplace(key, static_cast<int32_t>(groups.size()));
        if (inserted) {
            idx.sizes.push_back(0);
            std::string rendered;
            for (std::size_t c = 0; c < controls.size(); ++c) {
                if (c) rendered += ",";
                rendered += ds.column(controls[c]).name + "=";
                const int32_t code = key[c];
                rendered += code < 0 ? kMissingLabel : names[c][code];
            }
            idx.keys.push_back(rendered);
        }
        idx.stratum_of_row[r] = it->second;
        ++idx.sizes[it->second];
    }
    return idx;
}

}  // namespace crd
