#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crd/causal.hpp"
#include "crd/experiments.hpp"
#include "crd/search.hpp"

namespace py = pybind11;
using namespace crd;

namespace {

RoleSpec make_roles(const std::string& target, const std::vector<std::string>& actionable,
                    const std::vector<std::string>& control) {
    return RoleSpec{target, actionable, control};
}

ScoreParams make_params(double beta, const std::string& outcome, bool laplace) {
    ScoreParams p;
    p.beta = beta;
    p.outcome = outcome;
    p.laplace = laplace;
    return p;
}

StratumCounts make_counts(int64_t a, int64_t b, int64_t c, int64_t d) {
    return StratumCounts{a, b, c, d};
}

py::dict scored_rule_dict(const ScoredRule& sr, const PropositionPool& pool) {
    py::dict d;
    d["rule"] = pool.render(sr.rule);
    d["pool_indices"] = sr.rule.indices();
    d["reliable"] = sr.reliable;
    d["plugin"] = sr.plugin;
    d["coverage"] = sr.coverage;
    py::list strata;
    for (const PerStratum& ps : sr.per_stratum) {
        py::dict s;
        s["z"] = ps.key;
        s["a"] = ps.counts.a;
        s["b"] = ps.counts.b;
        s["c"] = ps.counts.c;
        s["d"] = ps.counts.d;
        s["tau"] = ps.tau;
        strata.append(s);
    }
    d["per_stratum"] = strata;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "top-k discovery of reliable causal rules";

    py::register_exception<IngestError>(m, "IngestError");
    py::register_exception<UndefinedEstimate>(m, "UndefinedEstimate");
    py::register_exception<GraphError>(m, "GraphError");
    py::register_exception<DegeneratePolicy>(m, "DegeneratePolicy");

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("row_count", &Dataset::row_count)
        .def_property_readonly("dropped_rows", [](const Dataset& ds) { return ds.dropped_rows; })
        .def("column_names", [](const Dataset& ds) {
            std::vector<std::string> names;
            for (const Column& c : ds.columns()) names.push_back(c.name);
            return names;
        });

    m.def(
        "load_csv",
        [](const std::string& path, const std::string& target,
           const std::vector<std::string>& actionable, const std::vector<std::string>& control,
           const std::string& missing) {
            return ingest_csv(path, make_roles(target, actionable, control),
                              missing == "drop" ? MissingPolicy::Drop : MissingPolicy::Keep);
        },
        py::arg("path"), py::arg("target"), py::arg("actionable"),
        py::arg("control") = std::vector<std::string>{}, py::arg("missing") = "keep");

    m.def(
        "discover",
        [](const Dataset& ds, const std::string& outcome, int k, double beta, double gamma,
           int max_depth, int bins, int threads) {
            const PropositionPool pool = build_pool(ds, bins);
            const StratumIndex idx = build_stratum_index(ds, bins);
            SearchConfig cfg;
            cfg.k = k;
            cfg.gamma = gamma;
            cfg.max_depth = max_depth;
            cfg.threads = threads;
            cfg.params = make_params(beta, outcome, true);
            const SearchResult res = discover_topk(pool, idx, cfg);
            py::list rules;
            for (const ScoredRule& sr : res.top) rules.append(scored_rule_dict(sr, pool));
            py::dict stats;
            stats["nodes_expanded"] = res.stats.nodes_expanded;
            stats["nodes_pruned"] = res.stats.nodes_pruned;
            stats["wall_seconds"] = res.stats.wall_seconds;
            py::dict out;
            out["rules"] = rules;
            out["stats"] = stats;
            return out;
        },
        py::arg("dataset"), py::arg("outcome"), py::arg("k") = 3, py::arg("beta") = 2.0,
        py::arg("gamma") = 1.0, py::arg("max_depth") = 6, py::arg("bins") = 8,
        py::arg("threads") = 1);

    m.def(
        "tau",
        [](int64_t a, int64_t b, int64_t c, int64_t d, double beta, bool laplace) {
            return tau(make_counts(a, b, c, d), make_params(beta, "", laplace));
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"), py::arg("beta") = 2.0,
        py::arg("laplace") = true,
        "confidence-penalized stratum difference from a 2x2 contingency table");

    m.def(
        "tight_oest_stratum",
        [](int64_t a, int64_t b, int64_t c, int64_t d, double beta) {
            return tight_oest_stratum(make_counts(a, b, c, d), make_params(beta, "", true));
        },
        py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"), py::arg("beta") = 2.0,
        "tight upper bound of tau over every refinement of the table");

    py::class_<DiscreteScm>(m, "DiscreteScm")
        .def_static("fig4", &fig4_preset, py::arg("augmented") = true)
        .def_static("from_json", [](const std::string& text) { return parse_scm_json(text); })
        .def_static("load", &load_scm_json)
        .def("to_json", &scm_to_json)
        .def("node_names", [](const DiscreteScm& scm) {
            std::vector<std::string> names;
            for (const GraphNode& n : scm.graph().nodes()) names.push_back(n.name);
            return names;
        })
        .def(
            "sample",
            [](const DiscreteScm& scm, std::size_t n, uint64_t seed) { return sample(scm, n, seed); },
            py::arg("n"), py::arg("seed") = 0)
        .def(
            "interventional_effect",
            [](const DiscreteScm& scm, const std::vector<std::pair<std::string, std::string>>& eq,
               const std::string& outcome) {
                return interventional_effect(scm, scm_rule_eq(scm, eq), outcome);
            },
            py::arg("rule"), py::arg("outcome") = "1")
        .def(
            "population_effect",
            [](const DiscreteScm& scm, const std::vector<std::pair<std::string, std::string>>& eq,
               const std::string& outcome) {
                return population_effect(scm, scm_rule_eq(scm, eq), outcome);
            },
            py::arg("rule"), py::arg("outcome") = "1");

    m.def(
        "check_admissible",
        [](const std::string& json_text) {
            // Accepts a graph document; cpts are not required.
            const CausalGraph g = parse_graph_json(json_text);
            const AdmissibilityReport rep = check_admissible(g);
            py::dict out;
            out["admissible"] = rep.admissible;
            py::list violations;
            for (const Violation& v : rep.violations) violations.append(v.describe(g));
            out["violations"] = violations;
            return out;
        },
        py::arg("scm_json"));

    m.def(
        "run_experiment",
        [](const std::string& name, const DiscreteScm& scm, const std::vector<int>& n_grid,
           int repetitions, uint64_t seed, int threads, double beta, const std::string& outcome) {
            ExperimentConfig cfg;
            cfg.n_grid = n_grid;
            cfg.repetitions = repetitions;
            cfg.seed = seed;
            cfg.threads = threads;
            cfg.beta = beta;
            cfg.outcome = outcome;
            ExperimentReport rep;
            if (name == "variance")
                rep = run_variance_experiment(scm, cfg);
            else if (name == "generalisation")
                rep = run_generalisation_experiment(scm, cfg);
            else if (name == "mse")
                rep = run_mse_experiment(scm, cfg);
            else if (name == "recovery")
                rep = run_recovery_experiment(scm, cfg);
            else if (name == "beta-sweep")
                rep = run_beta_sweep(scm, cfg);
            else
                throw std::invalid_argument("unknown experiment '" + name + "'");
            py::list rows;
            for (const ExperimentRow& r : rep.rows) {
                py::dict d;
                d["n"] = r.n;
                d["series"] = r.series;
                d["value"] = r.value;
                d["stddev"] = r.dispersion;
                rows.append(d);
            }
            py::dict out;
            out["kind"] = rep.kind;
            out["rows"] = rows;
            out["tsv"] = rep.to_tsv();
            return out;
        },
        py::arg("name"), py::arg("scm"), py::arg("n_grid"), py::arg("repetitions") = 25,
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("beta") = 2.0, py::arg("outcome") = "1");

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
