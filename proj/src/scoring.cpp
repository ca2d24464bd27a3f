#include "crd/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace crd {

double tau_cells(double a, double m, double n1, double n, double beta) {
    return (a + 1) / (m + 2) - (n1 - a + 1) / (n - m + 2) -
           beta / (2 * std::sqrt(m + 2)) - beta / (2 * std::sqrt(n - m + 2));
}

double tau(const StratumCounts& t, const ScoreParams& p) {
    const double m = static_cast<double>(t.n_rule());
    const double mc = static_cast<double>(t.n_comp());
    if (p.laplace)
        return tau_cells(static_cast<double>(t.a), m, static_cast<double>(t.n1()),
                         static_cast<double>(t.n()), p.beta);
    if (t.n_rule() == 0 || t.n_comp() == 0)
        throw UndefinedEstimate("tau undefined without Laplace correction on an empty rule side");
    return static_cast<double>(t.a) / m - static_cast<double>(t.c) / mc -
           p.beta / (2 * std::sqrt(m)) - p.beta / (2 * std::sqrt(mc));
}

double stratum_difference(const StratumCounts& t, const ScoreParams& p) {
    if (p.laplace)
        return (static_cast<double>(t.a) + 1) / (static_cast<double>(t.n_rule()) + 2) -
               (static_cast<double>(t.c) + 1) / (static_cast<double>(t.n_comp()) + 2);
    if (t.n_rule() == 0 || t.n_comp() == 0)
        throw UndefinedEstimate("plug-in difference undefined on an empty rule side");
    return static_cast<double>(t.a) / static_cast<double>(t.n_rule()) -
           static_cast<double>(t.c) / static_cast<double>(t.n_comp());
}

double tight_oest_stratum(const StratumCounts& t, const ScoreParams& p) {
    const double n1 = static_cast<double>(t.n1());
    const double n = static_cast<double>(t.n());
    double best = -std::numeric_limits<double>::infinity();

    // Scan a' downward. The first three terms of tau(a', 0) increase with
    // a' and the last one only ranges up to -beta/(2 sqrt(n+2)), so once
    // that combination drops below the incumbent nothing smaller can win.
    const double tail_cap = -p.beta / (2 * std::sqrt(n + 2));
    for (int64_t ap = t.a; ap >= 0; --ap) {
        const double da = static_cast<double>(ap);
        const double rising = (da + 1) / (da + 2) - (n1 - da + 1) / (n - da + 2) -
                              p.beta / (2 * std::sqrt(da + 2));
        if (rising + tail_cap <= best) break;
        best = std::max(best, tau_cells(da, da, n1, n, p.beta));
    }

    // b' = 0 dominates a row whenever (a'+1) >= (beta/2)sqrt(a'+2): the first
    // term's loss then outweighs the rule-side penalty saved by growing b'.
    // The few rows below that threshold need the b' scan to reach the exact
    // grid maximum. Within a row, every term except the rule-side penalty
    // decreases with b' and that penalty is at most zero, which again gives
    // an exact stopping condition.
    for (int64_t ap = 0; ap <= t.a; ++ap) {
        const double da = static_cast<double>(ap);
        if (da + 1 >= 0.5 * p.beta * std::sqrt(da + 2)) break;
        for (int64_t bp = 1; bp <= t.b; ++bp) {
            const double m = static_cast<double>(ap + bp);
            const double falling = (da + 1) / (m + 2) - (n1 - da + 1) / (n - m + 2) -
                                   p.beta / (2 * std::sqrt(n - m + 2));
            if (falling <= best) break;
            best = std::max(best, tau_cells(da, m, n1, n, p.beta));
        }
    }
    return best;
}

Scorer::Scorer(const Dataset& ds, const StratumIndex& idx, const ScoreParams& params)
    : idx_(&idx), params_(params), n_(ds.row_count()), y_mask_(ds.row_count()) {
    const Column& target = ds.column(ds.target_index());
    if (target.kind == ColumnKind::Categorical) {
        auto code = target.code_of(params.outcome);
        if (!code)
            throw IngestError("outcome value '" + params.outcome + "' never occurs in target column '" +
                              target.name + "'");
        for (std::size_t r = 0; r < n_; ++r)
            if (target.codes[r] == *code) y_mask_.set(r);
    } else {
        double want = 0.0;
        try {
            want = std::stod(params.outcome);
        } catch (const std::exception&) {
            throw IngestError("outcome value '" + params.outcome + "' is not numeric but target '" +
                              target.name + "' is");
        }
        for (std::size_t r = 0; r < n_; ++r)
            if (target.values[r] == want) y_mask_.set(r);
    }

    const std::size_t strata = idx.stratum_count();
    stratum_masks_.assign(strata, RowSet(n_));
    for (std::size_t r = 0; r < n_; ++r) stratum_masks_[idx.stratum_of_row[r]].set(r);
    stratum_positives_.resize(strata);
    for (std::size_t z = 0; z < strata; ++z)
        stratum_positives_[z] = static_cast<int64_t>(stratum_masks_[z].and_count(y_mask_));
    total_positives_ = static_cast<int64_t>(y_mask_.count());
    row_cell_.resize(n_);
    for (std::size_t r = 0; r < n_; ++r)
        row_cell_[r] = idx.stratum_of_row[r] * 2 + static_cast<int32_t>(y_mask_.test(r));
}

std::vector<StratumCounts> Scorer::counts(const RowSet& extension) const {
    const std::size_t strata = stratum_masks_.size();
    std::vector<StratumCounts> out(strata);
    if (strata <= 4) {
        for (std::size_t z = 0; z < strata; ++z) {
            const int64_t m = static_cast<int64_t>(extension.and_count(stratum_masks_[z]));
            const int64_t a =
                static_cast<int64_t>(RowSet::and3_count(extension, stratum_masks_[z], y_mask_));
            StratumCounts& t = out[z];
            t.a = a;
            t.b = m - a;
            t.c = stratum_positives_[z] - a;
            t.d = static_cast<int64_t>(idx_->sizes[z]) - m - t.c;
        }
        return out;
    }
    // Many strata: one pass over the extension's rows beats per-stratum
    // masked popcounts.
    std::vector<int64_t> cells(strata * 2, 0);
    extension.for_each([&](std::size_t r) { ++cells[row_cell_[r]]; });
    for (std::size_t z = 0; z < strata; ++z) {
        StratumCounts& t = out[z];
        t.a = cells[z * 2 + 1];
        t.b = cells[z * 2];
        t.c = stratum_positives_[z] - t.a;
        t.d = static_cast<int64_t>(idx_->sizes[z]) - t.a - t.b - t.c;
    }
    return out;
}

double Scorer::stratum_weight(std::size_t stratum) const {
    const double nz = static_cast<double>(idx_->sizes[stratum]);
    const double N = static_cast<double>(n_);
    if (params_.laplace) {
        const double zobs = static_cast<double>(idx_->stratum_count());
        return (nz + 4) / (N + 4 * zobs);
    }
    return nz / N;
}

double Scorer::reliable_effect(const std::vector<StratumCounts>& counts) const {
    double r = 0.0;
    for (std::size_t z = 0; z < counts.size(); ++z) r += tau(counts[z], params_) * stratum_weight(z);
    return r;
}

double Scorer::plugin_effect(const std::vector<StratumCounts>& counts) const {
    double e = 0.0;
    for (std::size_t z = 0; z < counts.size(); ++z)
        e += stratum_difference(counts[z], params_) * stratum_weight(z);
    return e;
}

double Scorer::wracc(const std::vector<StratumCounts>& counts) const {
    // Ignores strata entirely; the two conditional probabilities carry the
    // Laplace correction, the coverage factor stays uncorrected.
    int64_t a = 0, m = 0;
    for (const StratumCounts& t : counts) {
        a += t.a;
        m += t.n_rule();
    }
    const double N = static_cast<double>(n_);
    const double p_rule = N > 0 ? static_cast<double>(m) / N : 0.0;
    const double p_y_rule = (static_cast<double>(a) + 1) / (static_cast<double>(m) + 2);
    const double p_y = (static_cast<double>(total_positives_) + 1) / (N + 2);
    return p_rule * (p_y_rule - p_y);
}

double Scorer::oest(const std::vector<StratumCounts>& counts) const {
    double bound = 0.0;
    for (std::size_t z = 0; z < counts.size(); ++z)
        bound += tight_oest_stratum(counts[z], params_) * stratum_weight(z);
    return bound;
}

ScoredRule Scorer::score_rule(const Rule& r, const PropositionPool& pool) const {
    ScoredRule out;
    out.rule = r;
    const RowSet ext = pool.extension(r);
    const std::vector<StratumCounts> cs = counts(ext);
    out.reliable = reliable_effect(cs);
    out.plugin = plugin_effect(cs);
    out.coverage = n_ > 0 ? static_cast<double>(ext.count()) / static_cast<double>(n_) : 0.0;
    out.per_stratum.reserve(cs.size());
    for (std::size_t z = 0; z < cs.size(); ++z)
        out.per_stratum.push_back({idx_->keys[z], cs[z], tau(cs[z], params_)});
    return out;
}

}  // namespace crd
