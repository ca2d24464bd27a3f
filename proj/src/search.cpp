#include "crd/search.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <thread>

namespace crd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Expansion happens in fixed-size batches: the batch is selected and merged
// deterministically, worker threads only split one batch among themselves.
// This keeps SearchResult independent of the thread count (a stale incumbent
// threshold inside a batch weakens pruning but never changes the result).
constexpr std::size_t kBatchSize = 64;

struct Node {
    Rule rule;
    double bound;
};

struct NodeOrder {
    // Max-heap: highest bound first, lexicographically smallest rule on ties.
    bool operator()(const Node& x, const Node& y) const {
        if (x.bound != y.bound) return x.bound < y.bound;
        return y.rule < x.rule;
    }
};

struct Candidate {
    Rule rule;
    double score;
    double bound;
    std::size_t ext_size;
};

// Exact top-k incumbents by (score desc, rule lex asc).
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) {}

    void offer(const Rule& r, double score) {
        entries_.emplace(score, r);
        if (entries_.size() > k_) entries_.erase(entries_.begin());
    }

    double kth_best() const {
        if (entries_.size() < k_) return kNegInf;
        return entries_.begin()->first;
    }

    std::vector<std::pair<double, Rule>> sorted_desc() const {
        std::vector<std::pair<double, Rule>> out(entries_.rbegin(), entries_.rend());
        return out;
    }

private:
    struct Order {
        bool operator()(const std::pair<double, Rule>& x, const std::pair<double, Rule>& y) const {
            if (x.first != y.first) return x.first < y.first;
            return y.second < x.second;  // worst entry = lowest score, lex-largest rule
        }
    };
    std::size_t k_;
    std::set<std::pair<double, Rule>, Order> entries_;
};

}  // namespace

void SearchConfig::validate() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (params.beta < 0) throw std::invalid_argument("beta must be >= 0");
    if (!params.laplace)
        throw std::invalid_argument("search requires the Laplace-corrected objective (the per-stratum "
                                    "bound is defined for it only)");
}

bool prune_test(double bound, double kth_best, double gamma) {
    // Strict: a subtree whose bound ties the incumbent threshold may still
    // contain an equal-scoring rule that wins the lexicographic tie-break,
    // and the result must match exhaustive enumeration exactly.
    return gamma * bound < kth_best;
}

SearchResult discover_topk(const PropositionPool& pool, const StratumIndex& idx,
                           const SearchConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const Scorer scorer(pool.dataset(), idx, cfg.params);
    SearchResult result;
    TopK incumbents(static_cast<std::size_t>(cfg.k));

    std::priority_queue<Node, std::vector<Node>, NodeOrder> frontier;
    // Root: scored for the bound, excluded from incumbents (its complement is
    // empty and it carries no causal reading).
    {
        const RowSet all(pool.dataset().row_count(), true);
        frontier.push(Node{Rule{}, scorer.oest(all)});
    }

    const int threads = std::max(1, cfg.threads);

    // Entries whose bound has fallen behind the incumbent threshold stay in
    // the queue until popped; on hard instances they pile up, so the queue
    // is re-filtered whenever it doubles past this mark.
    std::size_t refilter_at = 1u << 20;

    std::vector<Node> batch;
    std::vector<std::vector<Candidate>> children_of;
    while (!frontier.empty()) {
        // Deterministic batch selection against the frozen incumbent threshold.
        batch.clear();
        const double kth = incumbents.kth_best();

        if (frontier.size() > refilter_at) {
            std::priority_queue<Node, std::vector<Node>, NodeOrder> kept;
            while (!frontier.empty()) {
                if (prune_test(frontier.top().bound, kth, cfg.gamma))
                    ++result.stats.nodes_pruned;
                else
                    kept.push(std::move(const_cast<Node&>(frontier.top())));
                frontier.pop();
            }
            frontier = std::move(kept);
            refilter_at = std::max<std::size_t>(1u << 20, frontier.size() * 2);
        }

        while (!frontier.empty() && batch.size() < kBatchSize) {
            if (prune_test(frontier.top().bound, kth, cfg.gamma)) {
                result.stats.nodes_pruned += frontier.size();
                frontier = {};
                break;
            }
            batch.push_back(frontier.top());
            frontier.pop();
        }
        if (batch.empty()) break;

        children_of.assign(batch.size(), {});
        auto expand = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const Node& node = batch[i];
                const RowSet ext = pool.extension(node.rule);
                const std::size_t ext_size = ext.count();
                std::vector<Candidate>& out = children_of[i];
                const uint32_t start = node.rule.empty() ? 0 : node.rule.indices().back() + 1;
                for (uint32_t pi = start; pi < pool.size(); ++pi) {
                    if (!pool.admissible_extension(node.rule, pi)) continue;
                    const RowSet child_ext = RowSet::intersect(ext, pool.mask(pi));
                    const std::size_t child_size = child_ext.count();
                    if (child_size == ext_size) continue;  // non-proper refinement
                    const auto counts = scorer.counts(child_ext);
                    Candidate c;
                    c.rule = node.rule.extended(pi);
                    c.score = scorer.reliable_effect(counts);
                    c.bound = scorer.oest(counts);
                    c.ext_size = child_size;
                    out.push_back(std::move(c));
                }
            }
        };

        if (threads == 1 || batch.size() == 1) {
            expand(0, batch.size());
        } else {
            std::vector<std::thread> pool_threads;
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
            const std::size_t per = (batch.size() + threads - 1) / threads;
            for (int t = 0; t < threads; ++t) {
                const std::size_t b = t * per;
                const std::size_t e = std::min(batch.size(), b + per);
                if (b >= e) break;
                pool_threads.emplace_back([&, b, e, t] {
                    try {
                        expand(b, e);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool_threads) th.join();
            for (const std::exception_ptr& err : errors)
                if (err) std::rethrow_exception(err);
        }

        // Deterministic merge in batch order: score every visited rule, then
        // enqueue the survivors of the bound test.
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ++result.stats.nodes_expanded;
            for (Candidate& c : children_of[i]) {
                incumbents.offer(c.rule, c.score);
                if (static_cast<int>(c.rule.size()) >= cfg.max_depth) continue;
                if (c.ext_size == 0) continue;  // every further refinement is extension-equal
                if (prune_test(c.bound, incumbents.kth_best(), cfg.gamma)) {
                    ++result.stats.nodes_pruned;
                    continue;
                }
                frontier.push(Node{std::move(c.rule), c.bound});
            }
        }
    }

    for (const auto& [score, rule] : incumbents.sorted_desc())
        result.top.push_back(scorer.score_rule(rule, pool));

    result.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace crd
