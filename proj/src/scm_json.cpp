#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crd/causal.hpp"

namespace crd {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw GraphError(path + ": " + e.what());
    }
    return doc;
}

CausalGraph graph_from_json(const json& doc, const std::string& origin) {
    if (!doc.contains("nodes") || !doc["nodes"].is_array())
        throw GraphError(origin + ": missing 'nodes' array");
    std::vector<GraphNode> nodes;
    for (const json& jn : doc["nodes"]) {
        GraphNode n;
        n.name = jn.at("name").get<std::string>();
        n.role = node_role_from_string(jn.at("role").get<std::string>());
        nodes.push_back(std::move(n));
    }
    auto index_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == name) return static_cast<int>(i);
        throw GraphError(origin + ": edge references unknown node '" + name + "'");
    };
    std::vector<std::pair<int, int>> edges;
    if (doc.contains("edges")) {
        for (const json& je : doc["edges"]) {
            if (!je.is_array() || je.size() != 2)
                throw GraphError(origin + ": each edge must be a [from, to] pair");
            edges.emplace_back(index_of(je[0].get<std::string>()), index_of(je[1].get<std::string>()));
        }
    }
    return CausalGraph(std::move(nodes), std::move(edges));
}

}  // namespace

CausalGraph load_graph_json(const std::string& path) {
    return graph_from_json(read_json_file(path), path);
}

CausalGraph parse_graph_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw GraphError(origin + ": " + e.what());
    }
    return graph_from_json(doc, origin);
}

DiscreteScm parse_scm_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw GraphError(origin + ": " + e.what());
    }
    CausalGraph graph = graph_from_json(doc, origin);
    const std::size_t nn = graph.nodes().size();

    std::vector<std::vector<std::string>> domains(nn);
    for (const json& jn : doc["nodes"]) {
        const int v = graph.node_index(jn.at("name").get<std::string>());
        if (!jn.contains("domain"))
            throw GraphError(origin + ": node '" + graph.nodes()[v].name + "' has no domain");
        domains[v] = jn["domain"].get<std::vector<std::string>>();
    }

    if (!doc.contains("cpts") || !doc["cpts"].is_object())
        throw GraphError(origin + ": missing 'cpts' object");
    std::vector<std::vector<std::vector<double>>> cpts(nn);
    for (std::size_t v = 0; v < nn; ++v) {
        const std::string& name = graph.nodes()[v].name;
        if (!doc["cpts"].contains(name))
            throw GraphError(origin + ": no CPT for node '" + name + "'");
        const auto& parents = graph.parents(static_cast<int>(v));
        std::size_t rows = 1;
        for (int p : parents) rows *= domains[p].size();
        cpts[v].assign(rows, {});

        std::vector<char> seen(rows, 0);
        for (const json& jrow : doc["cpts"][name]) {
            const json& given = jrow.at("given");
            std::size_t row = 0;
            for (int p : parents) {
                const std::string& pname = graph.nodes()[p].name;
                if (!given.contains(pname))
                    throw GraphError(origin + ": CPT row of '" + name + "' misses parent '" + pname + "'");
                const std::string value = given[pname].get<std::string>();
                const auto& dom = domains[p];
                const auto it = std::find(dom.begin(), dom.end(), value);
                if (it == dom.end())
                    throw GraphError(origin + ": value '" + value + "' not in domain of '" + pname + "'");
                row = row * dom.size() + static_cast<std::size_t>(it - dom.begin());
            }
            if (seen[row])
                throw GraphError(origin + ": duplicate CPT row for node '" + name + "'");
            seen[row] = 1;
            cpts[v][row] = jrow.at("p").get<std::vector<double>>();
        }
        for (std::size_t r = 0; r < rows; ++r)
            if (!seen[r])
                throw GraphError(origin + ": node '" + name + "' lacks a CPT row for some parent configuration");
    }
    return DiscreteScm(std::move(graph), std::move(domains), std::move(cpts));
}

DiscreteScm load_scm_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scm_json(buf.str(), path);
}

std::string scm_to_json(const DiscreteScm& scm) {
    const CausalGraph& g = scm.graph();
    json doc;
    doc["nodes"] = json::array();
    for (std::size_t v = 0; v < g.nodes().size(); ++v) {
        doc["nodes"].push_back({{"name", g.nodes()[v].name},
                                {"role", to_string(g.nodes()[v].role)},
                                {"domain", scm.domain(static_cast<int>(v))}});
    }
    doc["edges"] = json::array();
    for (auto [from, to] : g.edges())
        doc["edges"].push_back(json::array({g.nodes()[from].name, g.nodes()[to].name}));
    doc["cpts"] = json::object();
    for (std::size_t v = 0; v < g.nodes().size(); ++v) {
        const auto& parents = g.parents(static_cast<int>(v));
        json rows = json::array();
        const std::size_t nrows = scm.cpt(static_cast<int>(v)).size();
        for (std::size_t r = 0; r < nrows; ++r) {
            json given = json::object();
            std::size_t rem = r;
            for (std::size_t pi = parents.size(); pi-- > 0;) {
                const int p = parents[pi];
                given[g.nodes()[p].name] = scm.domain(p)[rem % scm.domain_size(p)];
                rem /= scm.domain_size(p);
            }
            rows.push_back({{"given", given}, {"p", scm.cpt(static_cast<int>(v))[r]}});
        }
        doc["cpts"][g.nodes()[v].name] = std::move(rows);
    }
    return doc.dump(2);
}

}  // namespace crd
