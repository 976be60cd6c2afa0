#include "qostom/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qostom {

int LogicalTree::node_index(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

LogicalTree LogicalTree::build(const std::string& root,
                               const std::vector<std::tuple<int, std::string, std::string>>& edges) {
    LogicalTree t;
    auto intern = [&t](const std::string& n) {
        int i = t.node_index(n);
        if (i >= 0) return i;
        t.names.push_back(n);
        t.parent.push_back(-1);
        t.link_id.push_back(0);
        t.children.emplace_back();
        return static_cast<int>(t.names.size()) - 1;
    };
    intern(root);
    int max_id = 0;
    for (const auto& [id, from, to] : edges) {
        int u = intern(from);
        int v = intern(to);
        t.parent[v] = u;
        t.link_id[v] = id;
        t.children[u].push_back(v);
        max_id = std::max(max_id, id);
    }
    t.num_links = max_id;
    for (size_t v = 0; v < t.names.size(); ++v)
        if (t.children[v].empty()) t.leaves.push_back(static_cast<int>(v));
    return t;
}

LogicalTree LogicalTree::from_json(const nlohmann::json& j) {
    std::vector<std::tuple<int, std::string, std::string>> edges;
    for (const auto& e : j.at("links"))
        edges.emplace_back(e.at("id").get<int>(), e.at("from").get<std::string>(),
                           e.at("to").get<std::string>());
    LogicalTree t = build(j.at("root").get<std::string>(), edges);
    if (j.contains("nodes")) {
        for (const auto& n : j.at("nodes")) {
            std::string name = n.get<std::string>();
            if (t.node_index(name) < 0) {
                // node declared but never linked; keep it so validate() flags the orphan
                t.names.push_back(name);
                t.parent.push_back(-1);
                t.link_id.push_back(0);
                t.children.emplace_back();
            }
        }
    }
    return t;
}

LogicalTree LogicalTree::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open topology file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

LogicalTree LogicalTree::default_tree() {
    return build("s", {{1, "s", "a"},
                       {2, "a", "b"},
                       {3, "a", "c"},
                       {4, "b", "d1"},
                       {5, "b", "d2"},
                       {6, "c", "d3"},
                       {7, "c", "e"},
                       {8, "e", "d4"},
                       {9, "e", "d5"}});
}

std::vector<std::string> validate(const LogicalTree& t) {
    std::vector<std::string> errors;
    const int n = static_cast<int>(t.names.size());
    if (n == 0) {
        errors.push_back("empty tree");
        return errors;
    }

    int roots = 0;
    for (int v = 0; v < n; ++v)
        if (t.parent[v] < 0) ++roots;
    if (roots != 1)
        errors.push_back("expected exactly one root, found " + std::to_string(roots));

    // cycle / reachability: walk parent chain from every node
    for (int v = 0; v < n; ++v) {
        int steps = 0;
        int u = v;
        while (u >= 0 && steps <= n) {
            if (t.parent[u] == u) {
                errors.push_back("cycle: node " + t.names[u] + " is its own parent");
                break;
            }
            u = t.parent[u];
            ++steps;
        }
        if (steps > n) errors.push_back("cycle detected through node " + t.names[v]);
        if (v != 0 && t.parent[v] < 0)
            errors.push_back("orphan node " + t.names[v] + " (unreachable from root)");
    }

    std::set<int> ids;
    for (int v = 0; v < n; ++v) {
        if (t.parent[v] < 0) continue;
        int id = t.link_id[v];
        if (id < 1)
            errors.push_back("link id " + std::to_string(id) + " is not positive");
        else if (!ids.insert(id).second)
            errors.push_back("duplicate link id " + std::to_string(id));
    }
    for (int id = 1; id <= t.num_links; ++id)
        if (!ids.count(id)) errors.push_back("gap in link ids: missing " + std::to_string(id));

    if (t.leaves.size() < 2)
        errors.push_back("fewer than 2 leaves (" + std::to_string(t.leaves.size()) + ")");
    return errors;
}

std::vector<int> path_links(const LogicalTree& t, int leaf) {
    if (leaf < 0 || leaf >= static_cast<int>(t.names.size()))
        throw std::invalid_argument("unknown node index");
    if (!t.is_leaf(leaf))
        throw std::invalid_argument("node " + t.names[leaf] + " is not a leaf");
    std::vector<int> links;
    for (int v = leaf; t.parent[v] >= 0; v = t.parent[v]) links.push_back(t.link_id[v]);
    std::reverse(links.begin(), links.end());
    return links;
}

std::vector<int> path_links(const LogicalTree& t, const std::string& leaf_name) {
    int v = t.node_index(leaf_name);
    if (v < 0) throw std::invalid_argument("unknown node " + leaf_name);
    return path_links(t, v);
}

Identifiability check_identifiability(const LogicalTree& t) {
    Identifiability r;
    std::set<int> witness;
    for (size_t v = 0; v < t.names.size(); ++v) {
        if (t.parent[v] < 0 || t.is_leaf(static_cast<int>(v))) continue;
        if (t.children[v].size() < 2) {
            // this node's incoming link and its sole child's link only ever
            // appear as a sum
            witness.insert(t.link_id[v]);
            for (int c : t.children[v]) witness.insert(t.link_id[c]);
        }
    }
    r.identifiable = witness.empty();
    r.witness_links.assign(witness.begin(), witness.end());
    return r;
}

}  // namespace qostom
