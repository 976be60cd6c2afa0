#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qostom {

// Rooted logical tree: source at the root, one link per edge, destinations
// at the leaves. Node 0 is always the root. Link ids are dense 1..L so link
// attributes can live in plain arrays indexed by id-1.
struct LogicalTree {
    std::vector<std::string> names;
    std::vector<int> parent;              // node index, -1 for the root
    std::vector<int> link_id;             // incoming link id, 0 for the root
    std::vector<std::vector<int>> children;
    std::vector<int> leaves;              // node indices in construction order
    int num_links = 0;

    int node_index(const std::string& name) const;
    bool is_leaf(int v) const { return children[v].empty(); }

    // Edge list constructor; edges are (link_id, from, to). Tolerates broken
    // input (cycles, gaps) so validate() can report it.
    static LogicalTree build(const std::string& root,
                             const std::vector<std::tuple<int, std::string, std::string>>& edges);
    static LogicalTree from_json(const nlohmann::json& j);
    static LogicalTree from_json_file(const std::string& path);

    // 9-link two-level tree: s-a, a-{b,c}, b-{d1,d2}, c-{d3,e}, e-{d4,d5}.
    static LogicalTree default_tree();
};

// Empty list means the tree is valid; otherwise one message per violation.
std::vector<std::string> validate(const LogicalTree& tree);

// Root-to-leaf link ids, root side first. Throws std::invalid_argument on an
// unknown node or a non-leaf.
std::vector<int> path_links(const LogicalTree& tree, int leaf);
std::vector<int> path_links(const LogicalTree& tree, const std::string& leaf_name);

struct Identifiability {
    bool identifiable = false;
    std::vector<int> witness_links;  // links in series that cannot be separated
};

// Under multicast probing with a zero-delay atom on every link, all link
// distributions are identifiable iff every internal node has >= 2 children.
Identifiability check_identifiability(const LogicalTree& tree);

}  // namespace qostom
