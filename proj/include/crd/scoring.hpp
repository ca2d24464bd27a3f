#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "crd/dataset.hpp"
#include "crd/rowset.hpp"
#include "crd/rules.hpp"

namespace crd {

struct UndefinedEstimate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 2x2 contingency table of rule x outcome within one stratum.
struct StratumCounts {
    int64_t a = 0;  // rule true,  Y = y
    int64_t b = 0;  // rule true,  Y != y
    int64_t c = 0;  // rule false, Y = y
    int64_t d = 0;  // rule false, Y != y

    int64_t n_rule() const { return a + b; }
    int64_t n_comp() const { return c + d; }
    int64_t n1() const { return a + c; }
    int64_t n0() const { return b + d; }
    int64_t n() const { return a + b + c + d; }
};

struct ScoreParams {
    double beta = 2.0;
    std::string outcome;  // target value y
    bool laplace = true;
};

// Penalized stratum difference from free cells: rule-side positives a, rule
// side size m = a+b, stratum positives n1 and stratum size n. Shared by
// tau(), the per-stratum bound, and the test oracles, so the bound attains
// bit-identical values on the b'=0 row.
double tau_cells(double a, double m, double n1, double n, double beta);

// Confidence-penalized per-stratum probability difference. With
// laplace=false both sides must be non-empty.
double tau(const StratumCounts& t, const ScoreParams& p);

// Uncorrected difference a/n_rule - c/n_comp (Laplace variant when set).
double stratum_difference(const StratumCounts& t, const ScoreParams& p);

// Tight per-stratum upper bound over every refinement configuration
// (a', b') in {0..a} x {0..b}: the maximum sits on the b' = 0 row, found by
// a linear scan over a'.
double tight_oest_stratum(const StratumCounts& t, const ScoreParams& p);

struct PerStratum {
    std::string key;
    StratumCounts counts;
    double tau = 0.0;
};

struct ScoredRule {
    Rule rule;
    double reliable = 0.0;
    double plugin = 0.0;
    double coverage = 0.0;
    std::vector<PerStratum> per_stratum;
};

// Immutable scoring context: outcome mask, per-stratum masks and totals.
class Scorer {
public:
    Scorer(const Dataset& ds, const StratumIndex& idx, const ScoreParams& params);

    const ScoreParams& params() const { return params_; }
    const StratumIndex& strata() const { return *idx_; }
    std::size_t row_count() const { return n_; }
    int64_t outcome_total() const { return total_positives_; }
    const RowSet& outcome_mask() const { return y_mask_; }

    // Per-stratum contingency tables of a rule extension.
    std::vector<StratumCounts> counts(const RowSet& extension) const;

    // Stratum weight p̂(z): (n_z+4)/(N+4|Z_obs|) under Laplace, n_z/N otherwise.
    double stratum_weight(std::size_t stratum) const;

    double reliable_effect(const std::vector<StratumCounts>& counts) const;
    double plugin_effect(const std::vector<StratumCounts>& counts) const;
    double wracc(const std::vector<StratumCounts>& counts) const;
    double oest(const std::vector<StratumCounts>& counts) const;

    double reliable_effect(const RowSet& ext) const { return reliable_effect(counts(ext)); }
    double plugin_effect(const RowSet& ext) const { return plugin_effect(counts(ext)); }
    double wracc(const RowSet& ext) const { return wracc(counts(ext)); }
    double oest(const RowSet& ext) const { return oest(counts(ext)); }

    ScoredRule score_rule(const Rule& r, const PropositionPool& pool) const;

private:
    const StratumIndex* idx_;
    ScoreParams params_;
    std::size_t n_ = 0;
    int64_t total_positives_ = 0;
    RowSet y_mask_;
    std::vector<RowSet> stratum_masks_;
    std::vector<int64_t> stratum_positives_;
    std::vector<int32_t> row_cell_;  // stratum * 2 + outcome bit, per row
};

}  // namespace crd
