#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crd/dataset.hpp"
#include "crd/rowset.hpp"

namespace crd {

enum class Relation { EQ, LEQ, GT };

struct Proposition {
    int column = -1;          // dataset column index
    Relation rel = Relation::EQ;
    int32_t code = -1;        // EQ: categorical code
    double threshold = 0.0;   // LEQ / GT: cut point
    uint32_t pool_index = 0;
};

// Canonical rule: strictly increasing pool indices; empty = root (⊤).
class Rule {
public:
    Rule() = default;
    explicit Rule(std::vector<uint32_t> indices) : idx_(std::move(indices)) {}

    const std::vector<uint32_t>& indices() const { return idx_; }
    std::size_t size() const { return idx_.size(); }
    bool empty() const { return idx_.empty(); }

    Rule extended(uint32_t pool_index) const {
        Rule r = *this;
        r.idx_.push_back(pool_index);
        return r;
    }

    bool operator==(const Rule& other) const { return idx_ == other.idx_; }
    bool operator<(const Rule& other) const { return idx_ < other.idx_; }

private:
    std::vector<uint32_t> idx_;
};

// Proposition pool over the actionable columns of one dataset, with the row
// mask of each proposition precomputed.
class PropositionPool {
public:
    PropositionPool(const Dataset& ds, const std::vector<BinnedColumn>& binned);

    const Dataset& dataset() const { return *ds_; }
    std::size_t size() const { return props_.size(); }
    const Proposition& prop(uint32_t i) const { return props_.at(i); }
    const RowSet& mask(uint32_t i) const { return masks_.at(i); }

    std::string render_prop(uint32_t i) const;
    // Conditions joined by " && "; the root renders as "<all>".
    std::string render(const Rule& r) const;

    RowSet extension(const Rule& r) const;
    double coverage(const Rule& r) const;

    // True when `pool_index` may be appended to r under the per-column
    // guard: at most one LEQ and one GT per column, EQ never combined with
    // another proposition on the same column.
    bool admissible_extension(const Rule& r, uint32_t pool_index) const;

    // Lexicographic refinement: r ∧ π_i for every i greater than the last
    // index of r that passes the per-column guard. Purely syntactic.
    std::vector<Rule> refine(const Rule& r) const;

private:
    const Dataset* ds_;
    std::vector<Proposition> props_;
    std::vector<RowSet> masks_;
};

// Convenience: discretizes every numeric actionable column with max_bins and
// builds the pool.
PropositionPool build_pool(const Dataset& ds, int max_bins = 8);

}  // namespace crd
