#include "doctest.h"

#include <stdexcept>

#include <random>
#include <set>

#include "qostom/topology.hpp"

using namespace qostom;

TEST_CASE("default tree validates") {
    auto t = LogicalTree::default_tree();
    CHECK(validate(t).empty());
    CHECK(t.num_links == 9);
    CHECK(t.leaves.size() == 5);
}

TEST_CASE("self-parent node is reported as a cycle") {
    auto t = LogicalTree::build("s", {{1, "s", "a"}, {2, "a", "a"}, {3, "a", "d"}});
    auto errors = validate(t);
    bool cycle = false;
    for (const auto& e : errors) cycle = cycle || e.find("cycle") != std::string::npos;
    CHECK(cycle);
}

TEST_CASE("gap in link ids is reported") {
    auto t = LogicalTree::build("s", {{1, "s", "a"}, {2, "a", "d1"}, {4, "a", "d2"}});
    auto errors = validate(t);
    bool gap = false;
    for (const auto& e : errors) gap = gap || e.find("gap") != std::string::npos;
    CHECK(gap);
}

TEST_CASE("fewer than two leaves is reported") {
    auto t = LogicalTree::build("s", {{1, "s", "a"}, {2, "a", "d"}});
    auto errors = validate(t);
    bool few = false;
    for (const auto& e : errors) few = few || e.find("leaves") != std::string::npos;
    CHECK(few);
}

TEST_CASE("path_links on the default tree") {
    auto t = LogicalTree::default_tree();
    CHECK(path_links(t, "d1") == std::vector<int>{1, 2, 4});
    CHECK(path_links(t, "d4") == std::vector<int>{1, 3, 7, 8});
    CHECK(path_links(t, "d5") == std::vector<int>{1, 3, 7, 9});
}

TEST_CASE("path_links on a two-link chain") {
    auto t = LogicalTree::build("s", {{1, "s", "a"}, {2, "a", "d"}});
    CHECK(path_links(t, "d") == std::vector<int>{1, 2});
}

TEST_CASE("path_links error cases") {
    auto t = LogicalTree::default_tree();
    CHECK_THROWS_AS(path_links(t, "nope"), std::invalid_argument);
    CHECK_THROWS_AS(path_links(t, "a"), std::invalid_argument);  // not a leaf
}

TEST_CASE("identifiability on the default tree and small cases") {
    CHECK(check_identifiability(LogicalTree::default_tree()).identifiable);

    auto chain = LogicalTree::build("s", {{1, "s", "a"}, {2, "a", "d"}});
    auto r = check_identifiability(chain);
    CHECK_FALSE(r.identifiable);
    CHECK(r.witness_links == std::vector<int>{1, 2});

    auto star = LogicalTree::build("s", {{1, "s", "a"}, {2, "a", "d1"}, {3, "a", "d2"}});
    CHECK(check_identifiability(star).identifiable);
}

namespace {

// random tree with every non-leaf internal node given 1..3 children
LogicalTree random_tree(std::mt19937& rng, int max_nodes) {
    std::vector<std::tuple<int, std::string, std::string>> edges;
    int next = 0, link = 0;
    std::vector<std::string> frontier{"s"};
    while (!frontier.empty() && next < max_nodes) {
        std::string parent = frontier.back();
        frontier.pop_back();
        int kids = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < kids && next < max_nodes; ++i) {
            std::string name = "n" + std::to_string(next++);
            edges.emplace_back(++link, parent, name);
            if (rng() % 2) frontier.push_back(name);
        }
    }
    return LogicalTree::build("s", edges);
}

}  // namespace

TEST_CASE("paths of distinct leaves share a prefix and diverge once") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = random_tree(rng, 12);
        if (t.leaves.size() < 2) continue;
        for (size_t i = 0; i < t.leaves.size(); ++i)
            for (size_t j = i + 1; j < t.leaves.size(); ++j) {
                auto pa = path_links(t, t.leaves[i]);
                auto pb = path_links(t, t.leaves[j]);
                REQUIRE_FALSE(pa.empty());
                REQUIRE_FALSE(pb.empty());
                size_t c = 0;
                while (c < pa.size() && c < pb.size() && pa[c] == pb[c]) ++c;
                // after the common prefix the suffixes must be disjoint
                std::set<int> sa(pa.begin() + c, pa.end());
                for (size_t m = c; m < pb.size(); ++m) CHECK_FALSE(sa.count(pb[m]));
            }
    }
}

TEST_CASE("identifiable trees have a separability witness for every link") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 80; ++trial) {
        auto t = random_tree(rng, 14);
        if (!validate(t).empty()) continue;
        if (!check_identifiability(t).identifiable) continue;
        std::vector<std::vector<int>> paths;
        for (int leaf : t.leaves) paths.push_back(path_links(t, leaf));
        for (int k = 1; k <= t.num_links; ++k) {
            bool leaf_link = false;
            for (const auto& p : paths) leaf_link = leaf_link || p.back() == k;
            if (leaf_link) continue;
            // two leaves whose shared prefix ends exactly at k
            bool found = false;
            for (size_t i = 0; i < paths.size() && !found; ++i)
                for (size_t j = i + 1; j < paths.size() && !found; ++j) {
                    size_t c = 0;
                    while (c < paths[i].size() && c < paths[j].size() &&
                           paths[i][c] == paths[j][c])
                        ++c;
                    found = c > 0 && paths[i][c - 1] == k;
                }
            CHECK(found);
        }
    }
}

TEST_CASE("topology JSON round trip") {
    auto t = LogicalTree::default_tree();
    auto u = LogicalTree::from_json_file(std::string(QOSTOM_SOURCE_DIR) +
                                         "/data/topology/default.json");
    CHECK(validate(u).empty());
    CHECK(u.num_links == t.num_links);
    for (int leaf : u.leaves)
        CHECK(path_links(u, u.names[leaf]) == path_links(t, u.names[leaf]));
}
