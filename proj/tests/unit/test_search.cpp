#include <doctest.h>

#include <random>

#include "crd/causal.hpp"
#include "crd/search.hpp"
#include "test_util.hpp"

using namespace crd;
using crd::testing::brute_force_topk;
using crd::testing::for_each_proper_rule;
using crd::testing::random_dataset;

namespace {

SearchConfig config(int k, double gamma = 1.0, int threads = 1) {
    SearchConfig cfg;
    cfg.k = k;
    cfg.gamma = gamma;
    cfg.threads = threads;
    cfg.params.beta = 2.0;
    cfg.params.outcome = "1";
    return cfg;
}

}  // namespace

TEST_CASE("prune_test arithmetic") {
    CHECK(prune_test(0.4, 0.5, 1.0));
    CHECK_FALSE(prune_test(0.6, 0.5, 1.0));
    CHECK(prune_test(0.6, 0.5, 0.8));       // 0.48 < 0.5
    CHECK_FALSE(prune_test(0.5, 0.5, 1.0)); // ties stay: they may win on rule order
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(config(0).validate(), std::invalid_argument);
    SearchConfig bad_gamma = config(1);
    bad_gamma.gamma = 0.0;
    CHECK_THROWS_AS(bad_gamma.validate(), std::invalid_argument);
    SearchConfig no_laplace = config(1);
    no_laplace.params.laplace = false;
    CHECK_THROWS_AS(no_laplace.validate(), std::invalid_argument);
}

TEST_CASE("search equals brute force on random small datasets") {
    std::mt19937_64 rng(41);
    for (int iter = 0; iter < 25; ++iter) {
        const Dataset ds = random_dataset(rng, 40 + iter, 3, iter % 3 == 0 ? 1 : 0);
        const PropositionPool pool = build_pool(ds);
        const StratumIndex idx = build_stratum_index(ds);
        for (int k : {1, 3}) {
            const SearchConfig cfg = config(k);
            const Scorer scorer(ds, idx, cfg.params);
            const SearchResult got = discover_topk(pool, idx, cfg);
            const auto want = brute_force_topk(pool, scorer, k, cfg.max_depth);
            REQUIRE(got.top.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                CHECK(got.top[i].rule == want[i].second);
                CHECK(got.top[i].reliable == doctest::Approx(want[i].first).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("scores are non-increasing and bounded by k") {
    std::mt19937_64 rng(43);
    const Dataset ds = random_dataset(rng, 60, 4, 1);
    const PropositionPool pool = build_pool(ds);
    const StratumIndex idx = build_stratum_index(ds);
    const SearchResult res = discover_topk(pool, idx, config(5));
    REQUIRE(res.top.size() <= 5);
    for (std::size_t i = 1; i < res.top.size(); ++i)
        CHECK(res.top[i - 1].reliable >= res.top[i].reliable);
}

TEST_CASE("saturation: k larger than the language returns every rule") {
    const std::vector<std::string> header{"x", "y"};
    const std::vector<std::vector<std::string>> rows{{"a", "1"}, {"b", "0"}, {"a", "0"}, {"b", "1"}};
    const Dataset ds = ingest_rows(header, rows, {.target = "y", .actionable = {"x"}});
    const PropositionPool pool = build_pool(ds);
    const StratumIndex idx = build_stratum_index(ds);
    const Scorer scorer(ds, idx, config(1).params);

    std::size_t language_size = 0;
    for_each_proper_rule(pool, 6, [&](const Rule&, const RowSet&) { ++language_size; });

    const SearchResult res = discover_topk(pool, idx, config(1000));
    CHECK(res.top.size() == language_size);
    for (std::size_t i = 1; i < res.top.size(); ++i)
        CHECK(res.top[i - 1].reliable >= res.top[i].reliable);
}

TEST_CASE("gamma approximation and node monotonicity") {
    // The multiplicative gamma guarantee presumes a positive optimum, so
    // plant a strong effect: y copies x0 eight times out of ten.
    std::mt19937_64 rng(47);
    std::uniform_int_distribution<int> bit(0, 1);
    std::uniform_int_distribution<int> ten(0, 9);
    for (int iter = 0; iter < 10; ++iter) {
        std::vector<std::string> header{"x0", "x1", "x2", "y"};
        std::vector<std::vector<std::string>> rows;
        for (int r = 0; r < 160; ++r) {
            const int x0 = bit(rng);
            const int y = ten(rng) < 8 ? x0 : 1 - x0;
            rows.push_back({std::to_string(x0), std::to_string(bit(rng)), std::to_string(bit(rng)),
                            std::to_string(y)});
        }
        const Dataset ds =
            ingest_rows(header, rows, {.target = "y", .actionable = {"x0", "x1", "x2"}});
        const PropositionPool pool = build_pool(ds);
        const StratumIndex idx = build_stratum_index(ds);
        const Scorer scorer(ds, idx, config(1).params);
        const auto best = brute_force_topk(pool, scorer, 1, 6);
        REQUIRE(best.size() == 1);
        REQUIRE(best[0].first > 0);

        uint64_t prev_nodes = std::numeric_limits<uint64_t>::max();
        for (double gamma : {1.0, 0.8, 0.5}) {
            const SearchResult res = discover_topk(pool, idx, config(1, gamma));
            REQUIRE(res.top.size() == 1);
            CHECK(res.top[0].reliable >= gamma * best[0].first - 1e-12);
            CHECK(res.stats.nodes_expanded <= prev_nodes);
            prev_nodes = res.stats.nodes_expanded;
        }
    }
}

TEST_CASE("determinism across worker counts") {
    std::mt19937_64 rng(53);
    const Dataset ds = random_dataset(rng, 120, 5, 1);
    const PropositionPool pool = build_pool(ds);
    const StratumIndex idx = build_stratum_index(ds);

    const SearchResult serial = discover_topk(pool, idx, config(4, 1.0, 1));
    const SearchResult parallel = discover_topk(pool, idx, config(4, 1.0, 4));
    REQUIRE(serial.top.size() == parallel.top.size());
    for (std::size_t i = 0; i < serial.top.size(); ++i) {
        CHECK(serial.top[i].rule == parallel.top[i].rule);
        CHECK(serial.top[i].reliable == parallel.top[i].reliable);
    }
    CHECK(serial.stats.nodes_expanded == parallel.stats.nodes_expanded);
}

TEST_CASE("search recovers the causal rule from a large synthetic sample") {
    const DiscreteScm scm = fig4_preset(true);
    const Dataset ds = sample(scm, 3000, 2024);
    const PropositionPool pool = build_pool(ds);
    const StratumIndex idx = build_stratum_index(ds);
    const SearchResult res = discover_topk(pool, idx, config(1));
    REQUIRE(res.top.size() == 1);
    CHECK(pool.render(res.top[0].rule) == "X1 = 1");
}

TEST_CASE("max_depth bounds the result rules") {
    std::mt19937_64 rng(59);
    const Dataset ds = random_dataset(rng, 60, 5, 0);
    const PropositionPool pool = build_pool(ds);
    const StratumIndex idx = build_stratum_index(ds);
    SearchConfig cfg = config(8);
    cfg.max_depth = 2;
    const SearchResult res = discover_topk(pool, idx, cfg);
    for (const ScoredRule& sr : res.top) CHECK(sr.rule.size() <= 2);

    // And matches a depth-limited brute force.
    const Scorer scorer(ds, idx, cfg.params);
    const auto want = brute_force_topk(pool, scorer, cfg.k, cfg.max_depth);
    REQUIRE(res.top.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(res.top[i].rule == want[i].second);
}

TEST_CASE("bound admissibility over the refinement tree") {
    std::mt19937_64 rng(61);
    for (int iter = 0; iter < 8; ++iter) {
        const Dataset ds = random_dataset(rng, 40, 3, iter % 2);
        const PropositionPool pool = build_pool(ds);
        const StratumIndex idx = build_stratum_index(ds);
        const Scorer scorer(ds, idx, config(1).params);

        // For every rule r: oest(r) >= reliable(phi) for every descendant phi.
        std::function<void(const Rule&, const RowSet&)> check_subtree = [&](const Rule& r,
                                                                            const RowSet& ext) {
            const double bound = scorer.oest(scorer.counts(ext));
            for_each_proper_rule(pool, 6, [&](const Rule& phi, const RowSet& phi_ext) {
                // Restrict to descendants of r: extension subset + prefix.
                if (phi.size() <= r.size()) return;
                if (!std::equal(r.indices().begin(), r.indices().end(), phi.indices().begin())) return;
                CHECK(bound >= scorer.reliable_effect(scorer.counts(phi_ext)) - 1e-12);
            });
        };
        check_subtree(Rule{}, RowSet(ds.row_count(), true));
        for (const Rule& r : pool.refine(Rule{})) check_subtree(r, pool.extension(r));
    }
}
