#include "crd/rules.hpp"

#include <cmath>
#include <cstdio>

namespace crd {

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

PropositionPool::PropositionPool(const Dataset& ds, const std::vector<BinnedColumn>& binned)
    : ds_(&ds) {
    const std::size_t n = ds.row_count();

    auto bins_for = [&](int col) -> const BinnedColumn* {
        for (const BinnedColumn& b : binned)
            if (b.column == col) return &b;
        return nullptr;
    };

    for (int col : ds.actionable_indices()) {
        const Column& c = ds.column(col);
        if (c.kind == ColumnKind::Categorical) {
            // One EQ proposition per observed value, in code order (first
            // occurrence order); every observed value has support >= 1.
            for (int32_t code = 0; code < static_cast<int32_t>(c.labels.size()); ++code) {
                Proposition p;
                p.column = col;
                p.rel = Relation::EQ;
                p.code = code;
                p.pool_index = static_cast<uint32_t>(props_.size());
                RowSet m(n);
                for (std::size_t r = 0; r < n; ++r)
                    if (c.codes[r] == code) m.set(r);
                props_.push_back(p);
                masks_.push_back(std::move(m));
            }
        } else {
            const BinnedColumn* b = bins_for(col);
            if (!b) continue;  // numeric column without discretization: no propositions
            for (Relation rel : {Relation::LEQ, Relation::GT}) {
                for (double cut : b->cut_points) {
                    Proposition p;
                    p.column = col;
                    p.rel = rel;
                    p.threshold = cut;
                    p.pool_index = static_cast<uint32_t>(props_.size());
                    RowSet m(n);
                    for (std::size_t r = 0; r < n; ++r) {
                        const double v = c.values[r];
                        if (std::isnan(v)) continue;  // missing satisfies no numeric proposition
                        if (rel == Relation::LEQ ? v <= cut : v > cut) m.set(r);
                    }
                    props_.push_back(p);
                    masks_.push_back(std::move(m));
                }
            }
        }
    }
}

std::string PropositionPool::render_prop(uint32_t i) const {
    const Proposition& p = props_.at(i);
    const Column& c = ds_->column(p.column);
    switch (p.rel) {
        case Relation::EQ:
            return c.name + " = " + c.labels.at(p.code);
        case Relation::LEQ:
            return c.name + " <= " + format_value(p.threshold);
        case Relation::GT:
            return c.name + " > " + format_value(p.threshold);
    }
    return {};
}

std::string PropositionPool::render(const Rule& r) const {
    if (r.empty()) return "<all>";
    std::string out;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += " && ";
        out += render_prop(r.indices()[i]);
    }
    return out;
}

RowSet PropositionPool::extension(const Rule& r) const {
    RowSet ext(ds_->row_count(), true);
    for (uint32_t i : r.indices()) ext &= masks_.at(i);
    return ext;
}

double PropositionPool::coverage(const Rule& r) const {
    if (ds_->row_count() == 0) return 0.0;
    return static_cast<double>(extension(r).count()) / static_cast<double>(ds_->row_count());
}

bool PropositionPool::admissible_extension(const Rule& r, uint32_t pool_index) const {
    const Proposition& cand = props_.at(pool_index);
    for (uint32_t i : r.indices()) {
        const Proposition& have = props_.at(i);
        if (have.column != cand.column) continue;
        if (cand.rel == Relation::EQ || have.rel == Relation::EQ) return false;
        if (cand.rel == have.rel) return false;  // second LEQ or second GT on one column
    }
    return true;
}

std::vector<Rule> PropositionPool::refine(const Rule& r) const {
    std::vector<Rule> out;
    const uint32_t start = r.empty() ? 0 : r.indices().back() + 1;
    for (uint32_t i = start; i < props_.size(); ++i)
        if (admissible_extension(r, i)) out.push_back(r.extended(i));
    return out;
}

PropositionPool build_pool(const Dataset& ds, int max_bins) {
    std::vector<BinnedColumn> binned;
    for (int col : ds.actionable_indices()) {
        const Column& c = ds.column(col);
        if (c.kind != ColumnKind::Numeric) continue;
        BinnedColumn b = discretize(c.values, max_bins);
        b.column = col;
        binned.push_back(std::move(b));
    }
    return PropositionPool(ds, binned);
}

}  // namespace crd
