#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "crd/dataset.hpp"

namespace crd {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegeneratePolicy : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NodeRole { Actionable, Control, Target, Latent };

std::string to_string(NodeRole r);
NodeRole node_role_from_string(const std::string& s);

struct GraphNode {
    std::string name;
    NodeRole role = NodeRole::Actionable;
};

class CausalGraph {
public:
    CausalGraph() = default;
    CausalGraph(std::vector<GraphNode> nodes, std::vector<std::pair<int, int>> edges);

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    int node_index(const std::string& name) const;  // -1 when absent
    int target_index() const;

    bool has_edge(int from, int to) const;
    const std::vector<int>& parents(int v) const { return parents_[v]; }
    const std::vector<int>& children(int v) const { return children_[v]; }

    bool is_acyclic() const;
    std::vector<int> topological_order() const;  // throws GraphError on a cycle
    std::vector<int> indices_with_role(NodeRole r) const;
    bool is_descendant(int anc, int v) const;

private:
    std::vector<GraphNode> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
};

struct Violation {
    char criterion = '?';  // 'a'..'d'
    int from = -1;
    int to = -1;
    std::string describe(const CausalGraph& g) const;
};

struct AdmissibilityReport {
    bool admissible = false;
    std::vector<Violation> violations;
};

// Admissible input check: (a) no edge target -> actionable, (b) no edge
// actionable -> control, (c) no edge between actionable nodes, (d) no edge
// between a latent node and an actionable node. Throws GraphError on a
// cyclic graph.
AdmissibilityReport check_admissible(const CausalGraph& g);

// True when every undirected simple path from a node of xs to y that enters
// its x endpoint through an incoming edge is blocked given z_set: a
// non-collider on the path lies in z_set, or a collider on the path lies
// outside it. Collider status is judged on the path's own nodes; when a
// blocking collider has a descendant inside z_set a warning is appended.
bool blocks_all_spurious(const CausalGraph& g, const std::vector<int>& xs, int y,
                         const std::vector<int>& z_set,
                         std::vector<std::string>* warnings = nullptr);

// Discrete structural causal model: one categorical domain and one CPT row
// per parent configuration for every node.
class DiscreteScm {
public:
    DiscreteScm(CausalGraph graph, std::vector<std::vector<std::string>> domains,
                std::vector<std::vector<std::vector<double>>> cpts);

    const CausalGraph& graph() const { return graph_; }
    const std::vector<std::string>& domain(int v) const { return domains_[v]; }
    std::size_t domain_size(int v) const { return domains_[v].size(); }

    // cpt[v][row][value]; row = mixed-radix index over the parent values in
    // parents(v) order (first parent = most significant digit).
    const std::vector<std::vector<double>>& cpt(int v) const { return cpts_[v]; }
    std::size_t cpt_row(int v, const std::vector<int>& config) const;

    int value_code(int v, const std::string& value) const;  // -1 when absent

private:
    CausalGraph graph_;
    std::vector<std::vector<std::string>> domains_;
    std::vector<std::vector<std::vector<double>>> cpts_;
};

// Conjunction over actionable SCM nodes; a condition holds when the node's
// value is among `allowed`.
struct ScmCondition {
    int node = -1;
    std::vector<int> allowed;
};
using ScmRule = std::vector<ScmCondition>;

ScmRule scm_rule_eq(const DiscreteScm& scm, const std::vector<std::pair<std::string, std::string>>& eq);

// Ancestral sampling in topological order; latent nodes are sampled but left
// out of the emitted dataset. Column roles mirror node roles; every column is
// categorical with the node's full domain as label set.
Dataset sample(const DiscreteScm& scm, std::size_t n, uint64_t seed);

// Exact causal effect of the rule's stochastic policy on outcome y, computed
// by truncated factorization on the mutilated graph, weighted by the
// observational policy p(x | rule, z). Ground-truth oracle.
double interventional_effect(const DiscreteScm& scm, const ScmRule& rule, const std::string& outcome);

// Exact back-door expression E[p(y|rule,Z)] - E[p(y|!rule,Z)] evaluated on
// the observational joint (latents marginalized out).
double population_effect(const DiscreteScm& scm, const ScmRule& rule, const std::string& outcome);

// Fig-style three-node confounded model (Z -> X1, Z -> Y, X1 -> Y) plus,
// when augmented, five independent uniform binary actionable variables.
DiscreteScm fig4_preset(bool augmented = true);

// JSON document: {"nodes":[{name,role,domain?}], "edges":[[from,to],...],
// "cpts":{node:[{"given":{parent:value},"p":[...]},...]}}.
DiscreteScm load_scm_json(const std::string& path);
DiscreteScm parse_scm_json(const std::string& text, const std::string& origin = "<string>");
CausalGraph load_graph_json(const std::string& path);   // cpts optional
CausalGraph parse_graph_json(const std::string& text, const std::string& origin = "<string>");
std::string scm_to_json(const DiscreteScm& scm);

}  // namespace crd
