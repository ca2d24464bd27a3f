#pragma once

#include <cstdint>
#include <vector>

#include "crd/dataset.hpp"
#include "crd/rules.hpp"
#include "crd/scoring.hpp"

namespace crd {

struct SearchConfig {
    int k = 3;
    double gamma = 1.0;
    int max_depth = 6;
    ScoreParams params;
    int threads = 1;

    void validate() const;
};

struct SearchStats {
    uint64_t nodes_expanded = 0;
    uint64_t nodes_pruned = 0;
    double wall_seconds = 0.0;
};

struct SearchResult {
    // Sorted by reliable effect descending, ties lexicographically by rule.
    std::vector<ScoredRule> top;
    SearchStats stats;
};

// True when the subtree under a node with this bound cannot contribute:
// gamma * bound < kth_best. Ties are kept: an equal bound may still hide an
// equal-scoring rule that wins the lexicographic tie-break.
bool prune_test(double bound, double kth_best, double gamma);

// Best-first branch-and-bound maximization of the reliable causal effect.
// Enumerates proper refinements only (children whose extension strictly
// shrinks); extension-equal duplicates of a rule carry identical scores, so
// the returned score profile matches the full language. At gamma = 1 the
// result is the exact top-k (within max_depth); at gamma < 1 every returned
// score is >= gamma times the depth-bounded optimum. Output is deterministic
// for fixed inputs regardless of the thread count.
SearchResult discover_topk(const PropositionPool& pool, const StratumIndex& idx,
                           const SearchConfig& cfg);

}  // namespace crd
