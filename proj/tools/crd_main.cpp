// crd: discovers conjunctive rules over actionable variables with maximal
// reliable causal effect on a target outcome, adjusting for control strata.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crd/causal.hpp"
#include "crd/experiments.hpp"
#include "crd/search.hpp"

using namespace crd;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNotAdmissible = 3;

int default_threads() {
    if (const char* env = std::getenv("CR_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// Output is buffered and written in one shot so error paths leave no
// partial files behind.
void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IngestError("cannot write '" + out_path + "'");
    out << text;
}

struct DiscoverOptions {
    std::string data, target, outcome, out;
    std::string actionable_csv, control_csv;
    std::string format = "table";
    std::string missing = "keep";
    int k = 3;
    double beta = 2.0;
    double gamma = 1.0;
    int max_depth = 6;
    int bins = 8;
    int threads = default_threads();
};

struct LoadedData {
    Dataset ds;
    PropositionPool pool;  // holds a pointer into ds; this struct must not move
    StratumIndex idx;

    LoadedData(Dataset&& d, int bins)
        : ds(std::move(d)), pool(build_pool(ds, bins)), idx(build_stratum_index(ds, bins)) {}
    LoadedData(const LoadedData&) = delete;
    LoadedData& operator=(const LoadedData&) = delete;
};

LoadedData load_for_search(const DiscoverOptions& opt) {
    RoleSpec roles;
    roles.target = opt.target;
    roles.actionable = split_list(opt.actionable_csv);
    roles.control = split_list(opt.control_csv);
    const MissingPolicy missing =
        opt.missing == "drop" ? MissingPolicy::Drop : MissingPolicy::Keep;
    return LoadedData(ingest_csv(opt.data, roles, missing), opt.bins);
}

json scored_rule_to_json(const ScoredRule& sr, const PropositionPool& pool) {
    json j;
    j["rule"] = pool.render(sr.rule);
    j["pool_indices"] = sr.rule.indices();
    j["reliable"] = sr.reliable;
    j["plugin"] = sr.plugin;
    j["coverage"] = sr.coverage;
    j["per_stratum"] = json::array();
    for (const PerStratum& ps : sr.per_stratum) {
        j["per_stratum"].push_back({{"z", ps.key},
                                    {"a", ps.counts.a},
                                    {"b", ps.counts.b},
                                    {"c", ps.counts.c},
                                    {"d", ps.counts.d},
                                    {"tau", ps.tau}});
    }
    return j;
}

json result_to_json(const SearchResult& res, const PropositionPool& pool,
                    const DiscoverOptions& opt) {
    json j;
    j["config"] = {{"k", opt.k},         {"beta", opt.beta},   {"gamma", opt.gamma},
                   {"max_depth", opt.max_depth}, {"bins", opt.bins},   {"outcome", opt.outcome},
                   {"target", opt.target}};
    j["rules"] = json::array();
    for (const ScoredRule& sr : res.top) j["rules"].push_back(scored_rule_to_json(sr, pool));
    j["stats"] = {{"nodes_expanded", res.stats.nodes_expanded},
                  {"nodes_pruned", res.stats.nodes_pruned},
                  {"wall_seconds", res.stats.wall_seconds}};
    return j;
}

std::string result_to_table(const SearchResult& res, const PropositionPool& pool, double gamma) {
    std::ostringstream out;
    std::size_t width = 12;
    for (const ScoredRule& sr : res.top) width = std::max(width, pool.render(sr.rule).size());
    char line[256];
    std::snprintf(line, sizeof line, "%-*s  %8s  %8s\n", static_cast<int>(width), "rule", "cvg",
                  "r_hat");
    out << line;
    for (const ScoredRule& sr : res.top) {
        std::snprintf(line, sizeof line, "%-*s  %8.4f  %8.4f\n", static_cast<int>(width),
                      pool.render(sr.rule).c_str(), sr.coverage, sr.reliable);
        out << line;
    }
    std::snprintf(line, sizeof line,
                  "# expanded %llu nodes, pruned %llu, %.2fs\n",
                  static_cast<unsigned long long>(res.stats.nodes_expanded),
                  static_cast<unsigned long long>(res.stats.nodes_pruned), res.stats.wall_seconds);
    out << line;
    if (gamma < 1.0) {
        std::snprintf(line, sizeof line,
                      "# gamma %.3g approximation: scores are >= %.3g of the depth-bounded optimum\n",
                      gamma, gamma);
        out << line;
    }
    return out.str();
}

int cmd_discover(const DiscoverOptions& opt) {
    const LoadedData data = load_for_search(opt);

    SearchConfig cfg;
    cfg.k = opt.k;
    cfg.gamma = opt.gamma;
    cfg.max_depth = opt.max_depth;
    cfg.threads = opt.threads;
    cfg.params.beta = opt.beta;
    cfg.params.outcome = opt.outcome;
    cfg.params.laplace = true;

    const SearchResult res = discover_topk(data.pool, data.idx, cfg);
    if (opt.format == "json")
        emit(result_to_json(res, data.pool, opt).dump(2) + "\n", opt.out);
    else
        emit(result_to_table(res, data.pool, opt.gamma), opt.out);
    return kExitOk;
}

int cmd_check_graph(const std::string& path, const std::string& format, const std::string& out) {
    const CausalGraph g = load_graph_json(path);
    const AdmissibilityReport rep = check_admissible(g);

    const std::vector<int> xs = g.indices_with_role(NodeRole::Actionable);
    const std::vector<int> zs = g.indices_with_role(NodeRole::Control);
    const int y = g.target_index();

    // Per-actionable-subset blocking summary (subsets capped for sanity).
    std::vector<std::string> warnings;
    std::size_t blocked = 0, subsets = 0;
    std::vector<std::pair<std::string, bool>> subset_rows;
    if (xs.size() <= 12) {
        for (uint32_t mask = 1; mask < (1u << xs.size()); ++mask) {
            std::vector<int> subset;
            std::string label;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (!(mask & (1u << i))) continue;
                subset.push_back(xs[i]);
                if (!label.empty()) label += ",";
                label += g.nodes()[xs[i]].name;
            }
            const bool ok = blocks_all_spurious(g, subset, y, zs, &warnings);
            subset_rows.emplace_back(label, ok);
            blocked += ok;
            ++subsets;
        }
    }
    std::sort(warnings.begin(), warnings.end());
    warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());

    std::ostringstream text;
    if (format == "json") {
        json j;
        j["admissible"] = rep.admissible;
        j["violations"] = json::array();
        for (const Violation& v : rep.violations) j["violations"].push_back(v.describe(g));
        j["subsets_checked"] = subsets;
        j["subsets_blocked"] = blocked;
        j["warnings"] = warnings;
        text << j.dump(2) << "\n";
    } else {
        text << (rep.admissible ? "admissible" : "not admissible") << "\n";
        for (const Violation& v : rep.violations) text << "violates " << v.describe(g) << "\n";
        if (subsets > 0)
            text << "spurious paths blocked for " << blocked << "/" << subsets
                 << " actionable subsets\n";
        for (const std::string& w : warnings) text << "warning: " << w << "\n";
    }
    emit(text.str(), out);
    return rep.admissible ? kExitOk : kExitNotAdmissible;
}

struct ExperimentOptions {
    std::string name;
    std::string preset = "fig4";
    std::string scm_path;
    std::string out;
    std::string outcome = "1";
    bool fast = false;
    uint64_t seed = 0;
    int reps = -1;
    double beta = 2.0;
    int threads = default_threads();
};

int cmd_synth_experiment(const ExperimentOptions& opt) {
    DiscreteScm scm = opt.scm_path.empty() ? fig4_preset(true) : load_scm_json(opt.scm_path);

    ExperimentConfig cfg;
    cfg.n_grid = default_n_grid(opt.fast);
    cfg.repetitions = opt.reps > 0 ? opt.reps : (opt.fast ? 25 : (opt.name == "variance" ? 25 : 100));
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    cfg.beta = opt.beta;
    cfg.outcome = opt.outcome;

    ExperimentReport report;
    if (opt.name == "variance")
        report = run_variance_experiment(scm, cfg);
    else if (opt.name == "generalisation")
        report = run_generalisation_experiment(scm, cfg);
    else if (opt.name == "mse")
        report = run_mse_experiment(scm, cfg);
    else if (opt.name == "recovery")
        report = run_recovery_experiment(scm, cfg);
    else if (opt.name == "beta-sweep")
        report = run_beta_sweep(scm, cfg);
    else
        throw std::invalid_argument("unknown experiment '" + opt.name + "'");

    emit(report.to_tsv(), opt.out);
    return kExitOk;
}

int cmd_bench(const DiscoverOptions& opt, const std::string& k_list) {
    const LoadedData data = load_for_search(opt);

    std::ostringstream out;
    out << "k\twall_seconds\tnodes_expanded\tnodes_pruned\ttop_score\n";
    for (const std::string& item : split_list(k_list)) {
        SearchConfig cfg;
        cfg.k = std::stoi(item);
        cfg.gamma = opt.gamma;
        cfg.max_depth = opt.max_depth;
        cfg.threads = opt.threads;
        cfg.params.beta = opt.beta;
        cfg.params.outcome = opt.outcome;
        const SearchResult res = discover_topk(data.pool, data.idx, cfg);
        char line[160];
        std::snprintf(line, sizeof line, "%d\t%.3f\t%llu\t%llu\t%.6f\n", cfg.k,
                      res.stats.wall_seconds,
                      static_cast<unsigned long long>(res.stats.nodes_expanded),
                      static_cast<unsigned long long>(res.stats.nodes_pruned),
                      res.top.empty() ? 0.0 : res.top.front().reliable);
        out << line;
    }
    emit(out.str(), opt.out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"top-k discovery of reliable causal rules from tabular data"};
    app.require_subcommand(1);

    DiscoverOptions dopt;
    CLI::App* discover = app.add_subcommand("discover", "search a CSV for top-k causal rules");
    discover->add_option("--data", dopt.data, "input CSV path")->required();
    discover->add_option("--target", dopt.target, "target column")->required();
    discover->add_option("--outcome", dopt.outcome, "outcome value of the target")->required();
    discover->add_option("--actionable", dopt.actionable_csv, "comma-separated actionable columns")
        ->required();
    discover->add_option("--control", dopt.control_csv, "comma-separated control columns");
    discover->add_option("--k", dopt.k, "number of rules")->check(CLI::Range(1, 1000000));
    discover->add_option("--beta", dopt.beta, "confidence z-score")
        ->check(CLI::Range(0.0, 1000.0));
    discover->add_option("--gamma", dopt.gamma, "approximation factor in (0,1]")
        ->check(CLI::Range(1e-9, 1.0));
    discover->add_option("--max-depth", dopt.max_depth, "maximum conditions per rule")
        ->check(CLI::Range(1, 64));
    discover->add_option("--bins", dopt.bins, "maximum equi-frequency bins")
        ->check(CLI::Range(2, 64));
    discover->add_option("--threads", dopt.threads, "worker threads");
    discover->add_option("--missing", dopt.missing, "missing-cell policy")
        ->check(CLI::IsMember({"keep", "drop"}));
    discover->add_option("--format", dopt.format, "output format")
        ->check(CLI::IsMember({"table", "json"}));
    discover->add_option("--out", dopt.out, "write output to a file");

    std::string graph_path, graph_format = "table", graph_out;
    CLI::App* check = app.add_subcommand("check-graph", "check a causal graph for admissibility");
    check->add_option("--graph", graph_path, "graph or SCM JSON path")->required();
    check->add_option("--format", graph_format, "output format")
        ->check(CLI::IsMember({"table", "json"}));
    check->add_option("--out", graph_out, "write output to a file");

    ExperimentOptions eopt;
    CLI::App* synth = app.add_subcommand("synth-experiment", "estimator studies on a synthetic model");
    synth->add_option("name", eopt.name, "one of variance, generalisation, mse, recovery, beta-sweep")
        ->required()
        ->check(CLI::IsMember({"variance", "generalisation", "mse", "recovery", "beta-sweep"}));
    synth->add_option("--preset", eopt.preset, "built-in model preset")
        ->check(CLI::IsMember({"fig4"}));
    synth->add_option("--scm", eopt.scm_path, "SCM JSON path (overrides the preset)");
    synth->add_flag("--fast", eopt.fast, "small grid and fewer repetitions");
    synth->add_option("--seed", eopt.seed, "RNG seed");
    synth->add_option("--reps", eopt.reps, "repetitions per grid point");
    synth->add_option("--beta", eopt.beta, "confidence z-score")->check(CLI::Range(0.0, 1000.0));
    synth->add_option("--outcome", eopt.outcome, "outcome value of the target");
    synth->add_option("--threads", eopt.threads, "worker threads");
    synth->add_option("--out", eopt.out, "write TSV to a file");

    DiscoverOptions bopt;
    std::string k_list = "1,10,100";
    CLI::App* bench = app.add_subcommand("bench", "search cost for several k");
    bench->add_option("--data", bopt.data, "input CSV path")->required();
    bench->add_option("--target", bopt.target, "target column")->required();
    bench->add_option("--outcome", bopt.outcome, "outcome value of the target")->required();
    bench->add_option("--actionable", bopt.actionable_csv, "comma-separated actionable columns")
        ->required();
    bench->add_option("--control", bopt.control_csv, "comma-separated control columns");
    bench->add_option("--gamma", bopt.gamma, "approximation factor in (0,1]")
        ->check(CLI::Range(1e-9, 1.0));
    bench->add_option("--beta", bopt.beta, "confidence z-score");
    bench->add_option("--bins", bopt.bins, "maximum equi-frequency bins")->check(CLI::Range(2, 64));
    bench->add_option("--max-depth", bopt.max_depth, "maximum conditions per rule")
        ->check(CLI::Range(1, 64));
    bench->add_option("--threads", bopt.threads, "worker threads");
    bench->add_option("--k-list", k_list, "comma-separated k values");
    bench->add_option("--out", bopt.out, "write output to a file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (discover->parsed()) return cmd_discover(dopt);
        if (check->parsed()) return cmd_check_graph(graph_path, graph_format, graph_out);
        if (synth->parsed()) return cmd_synth_experiment(eopt);
        if (bench->parsed()) return cmd_bench(bopt, k_list);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitConfigError;
}
