#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "crd/causal.hpp"
#include "crd/scoring.hpp"

namespace crd {

struct ExperimentRow {
    int n = 0;
    std::string series;
    double value = 0.0;
    double dispersion = 0.0;
};

struct ExperimentReport {
    std::string kind;
    std::vector<std::string> notes;
    std::vector<ExperimentRow> rows;  // N-major, series-minor, deterministic order

    void write_tsv(std::ostream& out) const;
    std::string to_tsv() const;
};

struct ExperimentConfig {
    std::vector<int> n_grid;
    int repetitions = 100;
    uint64_t seed = 0;
    int threads = 1;
    double beta = 2.0;
    std::string outcome = "1";
    int max_depth = 6;
};

std::vector<int> default_n_grid(bool fast);

// Stable per-repetition RNG stream: mixes (seed, n, rep) so experiment kinds
// that share a grid draw identical samples.
uint64_t derive_seed(uint64_t seed, uint64_t n, uint64_t rep);

// Exhaustive top-1 over proper canonical rules of the pool (depth-bounded),
// maximizing `measure` over per-stratum counts; ties resolved toward the
// lexicographically smallest rule. The root is not a candidate.
std::pair<Rule, double> exhaustive_top1(
    const PropositionPool& pool, const Scorer& scorer, int max_depth,
    const std::function<double(const std::vector<StratumCounts>&)>& measure);

// Estimate mean/std of the reliable and plug-in estimators for one fixed
// deep rule (series: reliable, plugin, population).
ExperimentReport run_variance_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg);

// Population effect achieved by each estimator's sample maximizer, against
// the population optimum (series: reliable, plugin, population_optimum).
ExperimentReport run_generalisation_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg);

// Mean squared error of the population effect of each estimator's sample
// maximizer (series: reliable, plugin).
ExperimentReport run_mse_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg);

// Fraction of repetitions whose top-1 rule equals the population-optimal
// rule (series: reliable, wracc, plugin_no_controls).
ExperimentReport run_recovery_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg);

// MSE of the reliable maximizer per beta (series: b<beta>).
ExperimentReport run_beta_sweep(const DiscreteScm& scm, const ExperimentConfig& cfg,
                                const std::vector<double>& betas = {});

// Population-optimal rule and its effect over the EQ-conjunction language of
// the SCM's actionable nodes.
std::pair<ScmRule, double> population_optimum(const DiscreteScm& scm, const std::string& outcome);

}  // namespace crd
