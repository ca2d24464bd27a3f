#include "crd/causal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace crd {

std::string to_string(NodeRole r) {
    switch (r) {
        case NodeRole::Actionable: return "actionable";
        case NodeRole::Control: return "control";
        case NodeRole::Target: return "target";
        case NodeRole::Latent: return "latent";
    }
    return "?";
}

NodeRole node_role_from_string(const std::string& s) {
    if (s == "actionable") return NodeRole::Actionable;
    if (s == "control") return NodeRole::Control;
    if (s == "target") return NodeRole::Target;
    if (s == "latent") return NodeRole::Latent;
    throw GraphError("unknown node role '" + s + "'");
}

CausalGraph::CausalGraph(std::vector<GraphNode> nodes, std::vector<std::pair<int, int>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    parents_.assign(nodes_.size(), {});
    children_.assign(nodes_.size(), {});
    for (auto [from, to] : edges_) {
        if (from < 0 || to < 0 || from >= static_cast<int>(nodes_.size()) ||
            to >= static_cast<int>(nodes_.size()))
            throw GraphError("edge endpoint out of range");
        if (from == to) throw GraphError("self-loop at node '" + nodes_[from].name + "'");
        parents_[to].push_back(from);
        children_[from].push_back(to);
    }
    for (auto& p : parents_) std::sort(p.begin(), p.end());
    for (auto& c : children_) std::sort(c.begin(), c.end());
    int targets = 0;
    for (const GraphNode& n : nodes_) targets += n.role == NodeRole::Target;
    if (targets != 1) throw GraphError("graph must have exactly one target node");
}

int CausalGraph::node_index(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].name == name) return static_cast<int>(i);
    return -1;
}

int CausalGraph::target_index() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].role == NodeRole::Target) return static_cast<int>(i);
    return -1;
}

bool CausalGraph::has_edge(int from, int to) const {
    const auto& c = children_[from];
    return std::binary_search(c.begin(), c.end(), to);
}

std::vector<int> CausalGraph::topological_order() const {
    std::vector<int> indeg(nodes_.size(), 0);
    for (auto [from, to] : edges_) ++indeg[to];
    std::vector<int> order;
    order.reserve(nodes_.size());
    std::vector<int> ready;
    for (std::size_t v = 0; v < nodes_.size(); ++v)
        if (indeg[v] == 0) ready.push_back(static_cast<int>(v));
    while (!ready.empty()) {
        const int v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (int c : children_[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (order.size() != nodes_.size()) throw GraphError("graph contains a cycle");
    return order;
}

bool CausalGraph::is_acyclic() const {
    try {
        topological_order();
        return true;
    } catch (const GraphError&) {
        return false;
    }
}

std::vector<int> CausalGraph::indices_with_role(NodeRole r) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].role == r) out.push_back(static_cast<int>(i));
    return out;
}

bool CausalGraph::is_descendant(int anc, int v) const {
    if (anc == v) return false;
    std::vector<int> stack{anc};
    std::vector<char> seen(nodes_.size(), 0);
    seen[anc] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int c : children_[u]) {
            if (c == v) return true;
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
        }
    }
    return false;
}

std::string Violation::describe(const CausalGraph& g) const {
    return std::string("(") + criterion + ") edge " + g.nodes()[from].name + " -> " +
           g.nodes()[to].name;
}

AdmissibilityReport check_admissible(const CausalGraph& g) {
    if (!g.is_acyclic()) throw GraphError("graph contains a cycle");
    AdmissibilityReport rep;
    const auto role = [&](int v) { return g.nodes()[v].role; };
    for (auto [from, to] : g.edges()) {
        if (role(from) == NodeRole::Target && role(to) == NodeRole::Actionable)
            rep.violations.push_back({'a', from, to});
        if (role(from) == NodeRole::Actionable && role(to) == NodeRole::Control)
            rep.violations.push_back({'b', from, to});
        if (role(from) == NodeRole::Actionable && role(to) == NodeRole::Actionable)
            rep.violations.push_back({'c', from, to});
        if ((role(from) == NodeRole::Latent && role(to) == NodeRole::Actionable) ||
            (role(from) == NodeRole::Actionable && role(to) == NodeRole::Latent))
            rep.violations.push_back({'d', from, to});
    }
    rep.admissible = rep.violations.empty();
    return rep;
}

namespace {

struct PathStep {
    int node;
    bool arrived_forward;  // edge pointed toward this node
};

// Enumerates simple undirected paths x .. y whose first edge is incoming at
// x, invoking visit(path) for each. Desk-scale graphs only.
void spurious_paths(const CausalGraph& g, int x, int y,
                    const std::function<void(const std::vector<PathStep>&)>& visit) {
    std::vector<PathStep> path{{x, false}};
    std::vector<char> used(g.nodes().size(), 0);
    used[x] = 1;

    std::function<void(int)> dfs = [&](int v) {
        auto step = [&](int next, bool forward) {
            if (used[next]) return;
            path.push_back({next, forward});
            if (next == y) {
                visit(path);
            } else {
                used[next] = 1;
                dfs(next);
                used[next] = 0;
            }
            path.pop_back();
        };
        if (path.size() == 1) {
            // Spurious paths start against an incoming edge at x.
            for (int p : g.parents(v)) step(p, false);
        } else {
            for (int c : g.children(v)) step(c, true);
            for (int p : g.parents(v)) step(p, false);
        }
    };
    dfs(x);
}

}  // namespace

bool blocks_all_spurious(const CausalGraph& g, const std::vector<int>& xs, int y,
                         const std::vector<int>& z_set, std::vector<std::string>* warnings) {
    std::vector<char> in_z(g.nodes().size(), 0);
    for (int z : z_set) in_z[z] = 1;

    bool all_blocked = true;
    for (int x : xs) {
        spurious_paths(g, x, y, [&](const std::vector<PathStep>& path) {
            bool blocked = false;
            std::vector<int> blocking_colliders;
            for (std::size_t i = 1; i + 1 < path.size(); ++i) {
                const int v = path[i].node;
                const bool collider = path[i].arrived_forward && !path[i + 1].arrived_forward;
                if (collider && !in_z[v]) {
                    blocked = true;
                    blocking_colliders.push_back(v);
                } else if (!collider && in_z[v]) {
                    blocked = true;
                    blocking_colliders.clear();
                    break;  // blocked by a conditioned non-collider, no caveat
                }
            }
            if (!blocked) all_blocked = false;
            if (warnings && blocked && !blocking_colliders.empty()) {
                for (int c : blocking_colliders) {
                    for (int z : z_set) {
                        if (g.is_descendant(c, z)) {
                            warnings->push_back("path blocked only by collider '" + g.nodes()[c].name +
                                                "' whose descendant '" + g.nodes()[z].name +
                                                "' is a control; conditioning may re-open it");
                        }
                    }
                }
            }
        });
    }
    return all_blocked;
}

DiscreteScm::DiscreteScm(CausalGraph graph, std::vector<std::vector<std::string>> domains,
                         std::vector<std::vector<std::vector<double>>> cpts)
    : graph_(std::move(graph)), domains_(std::move(domains)), cpts_(std::move(cpts)) {
    const std::size_t nn = graph_.nodes().size();
    if (domains_.size() != nn || cpts_.size() != nn)
        throw GraphError("domains/cpts must cover every node");
    graph_.topological_order();  // validates acyclicity
    for (std::size_t v = 0; v < nn; ++v) {
        if (domains_[v].empty()) throw GraphError("empty domain at node '" + graph_.nodes()[v].name + "'");
        std::size_t rows = 1;
        for (int p : graph_.parents(static_cast<int>(v))) rows *= domains_[p].size();
        if (cpts_[v].size() != rows)
            throw GraphError("node '" + graph_.nodes()[v].name + "' needs " + std::to_string(rows) +
                             " CPT rows, got " + std::to_string(cpts_[v].size()));
        for (const auto& row : cpts_[v]) {
            if (row.size() != domains_[v].size())
                throw GraphError("CPT row arity mismatch at node '" + graph_.nodes()[v].name + "'");
            double s = 0;
            for (double p : row) {
                if (p < 0) throw GraphError("negative probability at node '" + graph_.nodes()[v].name + "'");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw GraphError("CPT row of node '" + graph_.nodes()[v].name + "' sums to " +
                                 std::to_string(s));
        }
    }
}

std::size_t DiscreteScm::cpt_row(int v, const std::vector<int>& config) const {
    std::size_t row = 0;
    for (int p : graph_.parents(v)) row = row * domains_[p].size() + static_cast<std::size_t>(config[p]);
    return row;
}

int DiscreteScm::value_code(int v, const std::string& value) const {
    const auto& dom = domains_[v];
    for (std::size_t i = 0; i < dom.size(); ++i)
        if (dom[i] == value) return static_cast<int>(i);
    return -1;
}

ScmRule scm_rule_eq(const DiscreteScm& scm,
                    const std::vector<std::pair<std::string, std::string>>& eq) {
    ScmRule rule;
    for (const auto& [name, value] : eq) {
        const int v = scm.graph().node_index(name);
        if (v < 0) throw GraphError("unknown node '" + name + "'");
        const int code = scm.value_code(v, value);
        if (code < 0) throw GraphError("value '" + value + "' not in domain of '" + name + "'");
        rule.push_back({v, {code}});
    }
    return rule;
}

Dataset sample(const DiscreteScm& scm, std::size_t n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample size must be >= 1");
    const CausalGraph& g = scm.graph();
    const std::vector<int> order = g.topological_order();
    const std::size_t nn = g.nodes().size();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::vector<int32_t>> drawn(nn, std::vector<int32_t>(n));
    std::vector<int> config(nn, 0);
    for (std::size_t r = 0; r < n; ++r) {
        for (int v : order) {
            const auto& row = scm.cpt(v)[scm.cpt_row(v, config)];
            const double u = unit(rng);
            double acc = 0.0;
            int code = static_cast<int>(row.size()) - 1;
            for (std::size_t i = 0; i < row.size(); ++i) {
                acc += row[i];
                if (u < acc) {
                    code = static_cast<int>(i);
                    break;
                }
            }
            config[v] = code;
        }
        for (std::size_t v = 0; v < nn; ++v) drawn[v][r] = config[v];
    }

    std::vector<Column> cols;
    for (std::size_t v = 0; v < nn; ++v) {
        const GraphNode& node = g.nodes()[v];
        if (node.role == NodeRole::Latent) continue;
        Column col;
        col.name = node.name;
        col.kind = ColumnKind::Categorical;
        switch (node.role) {
            case NodeRole::Actionable: col.role = Role::Actionable; break;
            case NodeRole::Control: col.role = Role::Control; break;
            case NodeRole::Target: col.role = Role::Target; break;
            case NodeRole::Latent: break;
        }
        col.labels = scm.domain(static_cast<int>(v));
        col.codes = std::move(drawn[v]);
        cols.push_back(std::move(col));
    }
    return Dataset(std::move(cols), n);
}

namespace {

// Flat observational joint over all nodes (latents included).
struct Joint {
    std::vector<std::size_t> radix;  // domain sizes
    std::vector<double> prob;

    template <typename F>
    void for_each(F&& f) const {
        std::vector<int> config(radix.size(), 0);
        for (std::size_t idx = 0; idx < prob.size(); ++idx) {
            f(config, prob[idx]);
            for (std::size_t v = radix.size(); v-- > 0;) {
                if (++config[v] < static_cast<int>(radix[v])) break;
                config[v] = 0;
            }
        }
    }
};

Joint build_joint(const DiscreteScm& scm) {
    const std::size_t nn = scm.graph().nodes().size();
    Joint j;
    j.radix.resize(nn);
    std::size_t total = 1;
    for (std::size_t v = 0; v < nn; ++v) {
        j.radix[v] = scm.domain_size(static_cast<int>(v));
        total *= j.radix[v];
    }
    j.prob.assign(total, 0.0);

    std::vector<int> config(nn, 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        double p = 1.0;
        for (std::size_t v = 0; v < nn && p > 0; ++v)
            p *= scm.cpt(static_cast<int>(v))[scm.cpt_row(static_cast<int>(v), config)][config[v]];
        j.prob[idx] = p;
        for (std::size_t v = nn; v-- > 0;) {
            if (++config[v] < static_cast<int>(j.radix[v])) break;
            config[v] = 0;
        }
    }
    return j;
}

bool rule_holds(const ScmRule& rule, const std::vector<int>& config) {
    for (const ScmCondition& c : rule) {
        if (std::find(c.allowed.begin(), c.allowed.end(), config[c.node]) == c.allowed.end())
            return false;
    }
    return true;
}

struct RuleSetup {
    std::vector<int> rule_nodes;            // the rule's own actionable nodes, ascending
    std::vector<std::vector<int>> sat;      // x-configs over rule_nodes satisfying the rule
    std::vector<std::vector<int>> unsat;    // ... and its negation
    std::vector<int> controls;
    std::vector<std::size_t> control_radix;
};

RuleSetup prepare(const DiscreteScm& scm, const ScmRule& rule) {
    if (rule.empty()) throw DegeneratePolicy("empty rule has no complement policy");
    RuleSetup s;
    for (const ScmCondition& c : rule) {
        if (scm.graph().nodes()[c.node].role != NodeRole::Actionable)
            throw GraphError("rule conditions must reference actionable nodes");
        if (c.allowed.empty()) throw DegeneratePolicy("rule condition allows no value");
        s.rule_nodes.push_back(c.node);
    }
    std::sort(s.rule_nodes.begin(), s.rule_nodes.end());
    s.rule_nodes.erase(std::unique(s.rule_nodes.begin(), s.rule_nodes.end()), s.rule_nodes.end());

    // Enumerate the rule's local domain.
    std::vector<int> local(s.rule_nodes.size(), 0);
    std::vector<int> full(scm.graph().nodes().size(), 0);
    while (true) {
        for (std::size_t i = 0; i < s.rule_nodes.size(); ++i) full[s.rule_nodes[i]] = local[i];
        (rule_holds(rule, full) ? s.sat : s.unsat).push_back(local);
        std::size_t v = s.rule_nodes.size();
        for (; v-- > 0;) {
            if (++local[v] < static_cast<int>(scm.domain_size(s.rule_nodes[v]))) break;
            local[v] = 0;
        }
        if (v == static_cast<std::size_t>(-1)) break;
    }
    if (s.sat.empty()) throw DegeneratePolicy("no value assignment satisfies the rule");
    if (s.unsat.empty()) throw DegeneratePolicy("rule covers its whole domain; the complement is empty");

    s.controls = scm.graph().indices_with_role(NodeRole::Control);
    for (int z : s.controls) s.control_radix.push_back(scm.domain_size(z));
    return s;
}

std::size_t control_key(const RuleSetup& s, const std::vector<int>& config) {
    std::size_t key = 0;
    for (std::size_t i = 0; i < s.controls.size(); ++i)
        key = key * s.control_radix[i] + static_cast<std::size_t>(config[s.controls[i]]);
    return key;
}

}  // namespace

double population_effect(const DiscreteScm& scm, const ScmRule& rule, const std::string& outcome) {
    const RuleSetup setup = prepare(scm, rule);
    const int y = scm.graph().target_index();
    const int y_code = scm.value_code(y, outcome);
    if (y_code < 0) throw GraphError("outcome '" + outcome + "' not in target domain");

    std::size_t z_cells = 1;
    for (std::size_t r : setup.control_radix) z_cells *= r;

    std::vector<double> pz(z_cells, 0.0), p_rule(z_cells, 0.0), p_y_rule(z_cells, 0.0),
        p_comp(z_cells, 0.0), p_y_comp(z_cells, 0.0);

    const Joint joint = build_joint(scm);
    joint.for_each([&](const std::vector<int>& config, double p) {
        if (p == 0) return;
        const std::size_t zk = control_key(setup, config);
        pz[zk] += p;
        const bool holds = rule_holds(rule, config);
        const bool hit = config[y] == y_code;
        if (holds) {
            p_rule[zk] += p;
            if (hit) p_y_rule[zk] += p;
        } else {
            p_comp[zk] += p;
            if (hit) p_y_comp[zk] += p;
        }
    });

    double effect = 0.0;
    for (std::size_t zk = 0; zk < z_cells; ++zk) {
        if (pz[zk] == 0) continue;
        if (p_rule[zk] == 0 || p_comp[zk] == 0)
            throw DegeneratePolicy("rule or its complement has zero probability in a stratum");
        effect += pz[zk] * (p_y_rule[zk] / p_rule[zk] - p_y_comp[zk] / p_comp[zk]);
    }
    return effect;
}

double interventional_effect(const DiscreteScm& scm, const ScmRule& rule, const std::string& outcome) {
    const RuleSetup setup = prepare(scm, rule);
    const CausalGraph& g = scm.graph();
    const int y = g.target_index();
    const int y_code = scm.value_code(y, outcome);
    if (y_code < 0) throw GraphError("outcome '" + outcome + "' not in target domain");

    std::size_t z_cells = 1;
    for (std::size_t r : setup.control_radix) z_cells *= r;

    // Observational policy weights p(x | rule-side, z) and p(z).
    const Joint joint = build_joint(scm);
    std::vector<double> pz(z_cells, 0.0);
    // p_xz[x-config local index][z] accumulated per side below.
    std::size_t x_cells = 1;
    for (int v : setup.rule_nodes) x_cells *= scm.domain_size(v);
    auto local_index = [&](const std::vector<int>& local) {
        std::size_t key = 0;
        for (std::size_t i = 0; i < setup.rule_nodes.size(); ++i)
            key = key * scm.domain_size(setup.rule_nodes[i]) + static_cast<std::size_t>(local[i]);
        return key;
    };
    std::vector<double> p_xz(x_cells * z_cells, 0.0);
    joint.for_each([&](const std::vector<int>& config, double p) {
        if (p == 0) return;
        const std::size_t zk = control_key(setup, config);
        pz[zk] += p;
        std::size_t xk = 0;
        for (std::size_t i = 0; i < setup.rule_nodes.size(); ++i)
            xk = xk * scm.domain_size(setup.rule_nodes[i]) +
                 static_cast<std::size_t>(config[setup.rule_nodes[i]]);
        p_xz[xk * z_cells + zk] += p;
    });

    // Post-intervention p(y, z | do(X := x)) via the truncated factorization:
    // the intervened nodes keep no CPT factor.
    const std::size_t nn = g.nodes().size();
    std::vector<char> intervened(nn, 0);
    for (int v : setup.rule_nodes) intervened[v] = 1;

    auto do_distribution = [&](const std::vector<int>& local, std::vector<double>& pyz,
                               std::vector<double>& pz_do) {
        std::fill(pyz.begin(), pyz.end(), 0.0);
        std::fill(pz_do.begin(), pz_do.end(), 0.0);
        std::vector<int> config(nn, 0);
        while (true) {
            bool matches = true;
            for (std::size_t i = 0; i < setup.rule_nodes.size() && matches; ++i)
                matches = config[setup.rule_nodes[i]] == local[i];
            if (matches) {
                double p = 1.0;
                for (std::size_t v = 0; v < nn && p > 0; ++v) {
                    if (intervened[v]) continue;
                    p *= scm.cpt(static_cast<int>(v))[scm.cpt_row(static_cast<int>(v), config)][config[v]];
                }
                if (p > 0) {
                    const std::size_t zk = control_key(setup, config);
                    pz_do[zk] += p;
                    if (config[y] == y_code) pyz[zk] += p;
                }
            }
            std::size_t v = nn;
            for (; v-- > 0;) {
                if (++config[v] < static_cast<int>(scm.domain_size(static_cast<int>(v)))) break;
                config[v] = 0;
            }
            if (v == static_cast<std::size_t>(-1)) break;
        }
    };

    auto side_value = [&](const std::vector<std::vector<int>>& side) {
        // Sum_z p(z) Sum_{x in side} p(y | do(x), z) p(x | side, z)
        std::vector<double> side_mass(z_cells, 0.0);
        for (const auto& local : side)
            for (std::size_t zk = 0; zk < z_cells; ++zk)
                side_mass[zk] += p_xz[local_index(local) * z_cells + zk];

        std::vector<double> pyz(z_cells), pz_do(z_cells);
        double total = 0.0;
        for (const auto& local : side) {
            do_distribution(local, pyz, pz_do);
            for (std::size_t zk = 0; zk < z_cells; ++zk) {
                if (pz[zk] == 0) continue;
                if (side_mass[zk] == 0)
                    throw DegeneratePolicy("policy undefined: rule side has zero probability in a stratum");
                const double policy = p_xz[local_index(local) * z_cells + zk] / side_mass[zk];
                if (policy == 0) continue;
                if (pz_do[zk] == 0)
                    throw DegeneratePolicy("post-intervention stratum has zero probability");
                total += pz[zk] * policy * (pyz[zk] / pz_do[zk]);
            }
        }
        return total;
    };

    return side_value(setup.sat) - side_value(setup.unsat);
}

DiscreteScm fig4_preset(bool augmented) {
    std::vector<GraphNode> nodes{{"X1", NodeRole::Actionable},
                                 {"Z", NodeRole::Control},
                                 {"Y", NodeRole::Target}};
    std::vector<std::pair<int, int>> edges{{1, 0}, {1, 2}, {0, 2}};  // Z->X1, Z->Y, X1->Y
    std::vector<std::vector<std::string>> domains{{"0", "1"}, {"0", "1"}, {"0", "1"}};
    std::vector<std::vector<std::vector<double>>> cpts;
    cpts.resize(3);
    // X1 | Z: rows ordered by Z value.
    cpts[0] = {{0.5, 0.5}, {0.2, 0.8}};
    cpts[1] = {{0.1, 0.9}};
    // Y | X1, Z: parents sorted by node index -> (X1, Z); row = X1*2 + Z.
    cpts[2] = {
        {0.6, 0.4},  // X1=0, Z=0
        {0.5, 0.5},  // X1=0, Z=1
        {0.5, 0.5},  // X1=1, Z=0
        {0.3, 0.7},  // X1=1, Z=1
    };

    if (augmented) {
        for (int i = 2; i <= 6; ++i) {
            nodes.push_back({"X" + std::to_string(i), NodeRole::Actionable});
            domains.push_back({"0", "1"});
            cpts.push_back({{0.5, 0.5}});
        }
    }
    return DiscreteScm(CausalGraph(std::move(nodes), std::move(edges)), std::move(domains),
                       std::move(cpts));
}

}  // namespace crd
