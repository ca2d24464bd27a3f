#include "crd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

namespace crd {

namespace {

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    const std::size_t per = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::size_t b = t * per;
        const std::size_t e = std::min(count, b + per);
        if (b >= e) break;
        pool.emplace_back([&, b, e, t] {
            try {
                for (std::size_t i = b; i < e; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const std::exception_ptr& err : errors)
        if (err) std::rethrow_exception(err);
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

ScoreParams make_params(const ExperimentConfig& cfg, double beta) {
    ScoreParams p;
    p.beta = beta;
    p.outcome = cfg.outcome;
    p.laplace = true;
    return p;
}

// Sample rule (EQ propositions) -> (node, code) set on the SCM.
std::vector<std::pair<int, int>> rule_signature(const Rule& r, const PropositionPool& pool,
                                                const DiscreteScm& scm) {
    std::vector<std::pair<int, int>> sig;
    for (uint32_t pi : r.indices()) {
        const Proposition& p = pool.prop(pi);
        const Column& col = pool.dataset().column(p.column);
        const int node = scm.graph().node_index(col.name);
        const int code = scm.value_code(node, col.labels.at(p.code));
        sig.emplace_back(node, code);
    }
    std::sort(sig.begin(), sig.end());
    return sig;
}

ScmRule signature_to_rule(const std::vector<std::pair<int, int>>& sig) {
    ScmRule rule;
    for (auto [node, code] : sig) rule.push_back({node, {code}});
    return rule;
}

std::vector<std::pair<int, int>> scm_rule_signature(const ScmRule& r) {
    std::vector<std::pair<int, int>> sig;
    for (const ScmCondition& c : r) sig.emplace_back(c.node, c.allowed.at(0));
    std::sort(sig.begin(), sig.end());
    return sig;
}

struct SampleContext {
    Dataset ds;
    PropositionPool pool;  // holds a pointer into ds; this struct must not move
    StratumIndex strata;
    StratumIndex single;

    SampleContext(const SampleContext&) = delete;
    SampleContext& operator=(const SampleContext&) = delete;

    SampleContext(const DiscreteScm& scm, int n, uint64_t seed)
        : ds(sample(scm, static_cast<std::size_t>(n), seed)),
          pool(build_pool(ds)),
          strata(build_stratum_index(ds)) {
        // Unconditioned view: one stratum regardless of control columns.
        single.stratum_of_row.assign(ds.row_count(), 0);
        single.sizes.assign(1, static_cast<uint32_t>(ds.row_count()));
        single.keys.assign(1, "*");
    }
};

}  // namespace

uint64_t derive_seed(uint64_t seed, uint64_t n, uint64_t rep) {
    uint64_t x = seed ^ (0x9e3779b97f4a7c15ull + n * 0xbf58476d1ce4e5b9ull + rep * 0x94d049bb133111ebull);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

std::vector<int> default_n_grid(bool fast) {
    if (fast) return {100, 500, 1000, 3000};
    std::vector<int> grid;
    for (int n = 100; n <= 3000; n += 100) grid.push_back(n);
    return grid;
}

void ExperimentReport::write_tsv(std::ostream& out) const {
    for (const std::string& note : notes) out << "# " << note << "\n";
    out << "N\tmeasure\tvalue\tstddev\n";
    for (const ExperimentRow& r : rows)
        out << r.n << "\t" << r.series << "\t" << format_full(r.value) << "\t"
            << format_full(r.dispersion) << "\n";
}

std::string ExperimentReport::to_tsv() const {
    std::ostringstream out;
    write_tsv(out);
    return out.str();
}

std::pair<Rule, double> exhaustive_top1(
    const PropositionPool& pool, const Scorer& scorer, int max_depth,
    const std::function<double(const std::vector<StratumCounts>&)>& measure) {
    Rule best_rule;
    double best = -std::numeric_limits<double>::infinity();

    std::vector<uint32_t> stack;
    // Pre-order walk = lexicographic order, so the first strict maximum is
    // also the lexicographically smallest one.
    std::function<void(const Rule&, const RowSet&, std::size_t)> walk =
        [&](const Rule& r, const RowSet& ext, std::size_t ext_size) {
            if (static_cast<int>(r.size()) >= max_depth) return;
            const uint32_t start = r.empty() ? 0 : r.indices().back() + 1;
            for (uint32_t pi = start; pi < pool.size(); ++pi) {
                if (!pool.admissible_extension(r, pi)) continue;
                const RowSet child_ext = RowSet::intersect(ext, pool.mask(pi));
                const std::size_t child_size = child_ext.count();
                if (child_size == ext_size) continue;
                const Rule child = r.extended(pi);
                const double score = measure(scorer.counts(child_ext));
                if (score > best) {
                    best = score;
                    best_rule = child;
                }
                if (child_size > 0) walk(child, child_ext, child_size);
            }
        };
    const RowSet all(pool.dataset().row_count(), true);
    walk(Rule{}, all, all.count());
    return {best_rule, best};
}

std::pair<ScmRule, double> population_optimum(const DiscreteScm& scm, const std::string& outcome) {
    const std::vector<int> actionable = scm.graph().indices_with_role(NodeRole::Actionable);
    ScmRule best_rule;
    double best = -std::numeric_limits<double>::infinity();

    // Odometer over (unconstrained | = value) per actionable node.
    std::vector<int> choice(actionable.size(), 0);  // 0 = free, 1+v = pinned to value v
    while (true) {
        ScmRule rule;
        for (std::size_t i = 0; i < actionable.size(); ++i)
            if (choice[i] > 0) rule.push_back({actionable[i], {choice[i] - 1}});
        if (!rule.empty()) {
            const double e = population_effect(scm, rule, outcome);
            if (e > best) {
                best = e;
                best_rule = rule;
            }
        }
        std::size_t i = actionable.size();
        for (; i-- > 0;) {
            if (++choice[i] <= static_cast<int>(scm.domain_size(actionable[i]))) break;
            choice[i] = 0;
        }
        if (i == static_cast<std::size_t>(-1)) break;
    }
    return {best_rule, best};
}

namespace {

// Shared driver: per (N, rep) compute one double per series, then aggregate.
struct RepStudy {
    std::vector<std::string> series;
    std::function<std::vector<double>(int n, uint64_t rep_seed)> run_rep;
    // Aggregation: mean/std by default; overridable per experiment.
    std::function<std::pair<double, double>(const std::vector<double>&)> aggregate =
        [](const std::vector<double>& v) { return std::make_pair(mean_of(v), std_of(v)); };
};

ExperimentReport run_grid(const std::string& kind, const DiscreteScm&, const ExperimentConfig& cfg,
                          const RepStudy& study) {
    ExperimentReport report;
    report.kind = kind;
    report.notes.push_back("sampling: plain ancestral (stratum weights estimated from the sample)");
    report.notes.push_back("repetitions: " + std::to_string(cfg.repetitions));

    for (int n : cfg.n_grid) {
        std::vector<std::vector<double>> per_series(study.series.size(),
                                                    std::vector<double>(cfg.repetitions));
        parallel_for(static_cast<std::size_t>(cfg.repetitions), cfg.threads, [&](std::size_t rep) {
            const std::vector<double> vals =
                study.run_rep(n, derive_seed(cfg.seed, static_cast<uint64_t>(n), rep));
            for (std::size_t s = 0; s < study.series.size(); ++s) per_series[s][rep] = vals[s];
        });
        for (std::size_t s = 0; s < study.series.size(); ++s) {
            auto [value, disp] = study.aggregate(per_series[s]);
            report.rows.push_back({n, study.series[s], value, disp});
        }
    }
    return report;
}

}  // namespace

ExperimentReport run_variance_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg) {
    const ScoreParams params = make_params(cfg, cfg.beta);

    // The probe rule: one causal condition plus every independent actionable
    // pinned, when available (the "deep" rule of the running example);
    // otherwise the population optimum.
    std::vector<std::pair<std::string, std::string>> eq;
    const std::vector<std::string> deep = {"X1", "1", "X2", "0", "X3", "1",
                                           "X4", "1", "X5", "0", "X6", "0"};
    bool have_all = true;
    for (std::size_t i = 0; i < deep.size(); i += 2)
        have_all = have_all && scm.graph().node_index(deep[i]) >= 0;
    ScmRule probe;
    if (have_all) {
        for (std::size_t i = 0; i < deep.size(); i += 2) eq.emplace_back(deep[i], deep[i + 1]);
        probe = scm_rule_eq(scm, eq);
    } else {
        probe = population_optimum(scm, cfg.outcome).first;
    }
    const double pop_effect = population_effect(scm, probe, cfg.outcome);
    const auto probe_sig = scm_rule_signature(probe);

    RepStudy study;
    study.series = {"reliable", "plugin"};
    study.run_rep = [&](int n, uint64_t rep_seed) {
        const SampleContext sc(scm, n, rep_seed);
        const Scorer scorer(sc.ds, sc.strata, params);
        // Locate the probe rule's propositions in this sample's pool.
        std::vector<uint32_t> idx;
        for (auto [node, code] : probe_sig) {
            const std::string& name = scm.graph().nodes()[node].name;
            const std::string& label = scm.domain(node)[code];
            for (uint32_t pi = 0; pi < sc.pool.size(); ++pi) {
                const Proposition& p = sc.pool.prop(pi);
                if (sc.pool.dataset().column(p.column).name == name &&
                    sc.pool.dataset().column(p.column).labels.at(p.code) == label) {
                    idx.push_back(pi);
                    break;
                }
            }
        }
        std::sort(idx.begin(), idx.end());
        const Rule rule{idx};
        const auto counts = scorer.counts(sc.pool.extension(rule));
        return std::vector<double>{scorer.reliable_effect(counts), scorer.plugin_effect(counts)};
    };

    ExperimentReport report = run_grid("variance", scm, cfg, study);
    for (int n : cfg.n_grid) report.rows.push_back({n, "population", pop_effect, 0.0});
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const ExperimentRow& a, const ExperimentRow& b) { return a.n < b.n; });
    return report;
}

ExperimentReport run_generalisation_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg) {
    const ScoreParams params = make_params(cfg, cfg.beta);
    const auto [opt_rule, opt_effect] = population_optimum(scm, cfg.outcome);

    RepStudy study;
    study.series = {"reliable", "plugin"};
    study.run_rep = [&](int n, uint64_t rep_seed) {
        const SampleContext sc(scm, n, rep_seed);
        const Scorer scorer(sc.ds, sc.strata, params);
        const auto [rho, rho_score] = exhaustive_top1(
            sc.pool, scorer, cfg.max_depth,
            [&](const std::vector<StratumCounts>& c) { return scorer.reliable_effect(c); });
        const auto [phi, phi_score] = exhaustive_top1(
            sc.pool, scorer, cfg.max_depth,
            [&](const std::vector<StratumCounts>& c) { return scorer.plugin_effect(c); });
        const double e_rho =
            population_effect(scm, signature_to_rule(rule_signature(rho, sc.pool, scm)), cfg.outcome);
        const double e_phi =
            population_effect(scm, signature_to_rule(rule_signature(phi, sc.pool, scm)), cfg.outcome);
        return std::vector<double>{e_rho, e_phi};
    };

    ExperimentReport report = run_grid("generalisation", scm, cfg, study);
    for (int n : cfg.n_grid) report.rows.push_back({n, "population_optimum", opt_effect, 0.0});
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const ExperimentRow& a, const ExperimentRow& b) { return a.n < b.n; });
    return report;
}

ExperimentReport run_mse_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg) {
    const ScoreParams params = make_params(cfg, cfg.beta);
    const double opt_effect = population_optimum(scm, cfg.outcome).second;

    RepStudy study;
    study.series = {"reliable", "plugin"};
    study.run_rep = [&](int n, uint64_t rep_seed) {
        const SampleContext sc(scm, n, rep_seed);
        const Scorer scorer(sc.ds, sc.strata, params);
        std::vector<double> out;
        for (const std::string& which : study.series) {
            const bool reliable = which == "reliable";
            const auto [r, score] = exhaustive_top1(
                sc.pool, scorer, cfg.max_depth, [&](const std::vector<StratumCounts>& c) {
                    return reliable ? scorer.reliable_effect(c) : scorer.plugin_effect(c);
                });
            const double e =
                population_effect(scm, signature_to_rule(rule_signature(r, sc.pool, scm)), cfg.outcome);
            out.push_back((e - opt_effect) * (e - opt_effect));
        }
        return out;
    };

    return run_grid("mse", scm, cfg, study);
}

ExperimentReport run_recovery_experiment(const DiscreteScm& scm, const ExperimentConfig& cfg) {
    const ScoreParams params = make_params(cfg, cfg.beta);
    const auto opt_sig = scm_rule_signature(population_optimum(scm, cfg.outcome).first);

    RepStudy study;
    study.series = {"reliable", "wracc", "plugin_no_controls"};
    study.run_rep = [&](int n, uint64_t rep_seed) {
        const SampleContext sc(scm, n, rep_seed);
        const Scorer stratified(sc.ds, sc.strata, params);
        const Scorer unstratified(sc.ds, sc.single, params);
        std::vector<double> out;
        for (const std::string& which : study.series) {
            const Scorer& scorer = which == "reliable" ? stratified : unstratified;
            const auto [r, score] = exhaustive_top1(
                sc.pool, scorer, cfg.max_depth, [&](const std::vector<StratumCounts>& c) {
                    if (which == "reliable") return scorer.reliable_effect(c);
                    if (which == "wracc") return scorer.wracc(c);
                    return scorer.plugin_effect(c);
                });
            out.push_back(rule_signature(r, sc.pool, scm) == opt_sig ? 1.0 : 0.0);
        }
        return out;
    };
    study.aggregate = [&](const std::vector<double>& v) {
        const double p = mean_of(v);
        const double se = v.empty() ? 0.0 : std::sqrt(p * (1 - p) / static_cast<double>(v.size()));
        return std::make_pair(p, se);
    };

    return run_grid("recovery", scm, cfg, study);
}

ExperimentReport run_beta_sweep(const DiscreteScm& scm, const ExperimentConfig& cfg,
                                const std::vector<double>& betas) {
    // Defaults: z-scores of the 50/60/70/80/90/99% confidence levels.
    std::vector<double> bs = betas;
    if (bs.empty()) bs = {0.6745, 0.8416, 1.0364, 1.2816, 1.6449, 2.5758};
    const double opt_effect = population_optimum(scm, cfg.outcome).second;

    RepStudy study;
    for (double b : bs) {
        char label[32];
        std::snprintf(label, sizeof label, "b%g", b);
        study.series.push_back(label);
    }
    study.run_rep = [&, bs](int n, uint64_t rep_seed) {
        const SampleContext sc(scm, n, rep_seed);
        std::vector<double> out;
        for (double b : bs) {
            const Scorer scorer(sc.ds, sc.strata, make_params(cfg, b));
            const auto [r, score] = exhaustive_top1(
                sc.pool, scorer, cfg.max_depth,
                [&](const std::vector<StratumCounts>& c) { return scorer.reliable_effect(c); });
            const double e =
                population_effect(scm, signature_to_rule(rule_signature(r, sc.pool, scm)), cfg.outcome);
            out.push_back((e - opt_effect) * (e - opt_effect));
        }
        return out;
    };

    return run_grid("beta-sweep", scm, cfg, study);
}

}  // namespace crd
