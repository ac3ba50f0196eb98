#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "adjfas/graph.hpp"

using namespace adjfas;
using graph::Admg;
using graph::NodeSet;

namespace {

struct Step {
    int to;
    bool arrow_at_from;  // arrowhead pointing into the node we leave
    bool arrow_at_to;
};

std::vector<std::vector<Step>> steps_of(const Admg& g) {
    std::vector<std::vector<Step>> s(g.size());
    for (auto [a, b] : g.directed_edges()) {
        s[a].push_back({b, false, true});
        s[b].push_back({a, true, false});
    }
    for (auto [a, b] : g.bidirected_edges()) {
        s[a].push_back({b, true, true});
        s[b].push_back({a, true, true});
    }
    return s;
}

// Every simple path from a to b as (nodes, arrowhead flags per edge end).
struct Path {
    std::vector<int> nodes;
    std::vector<Step> edges;
};

void all_paths(const std::vector<std::vector<Step>>& s, int cur, int target, std::vector<bool>& seen, Path& p,
               const std::function<void(const Path&)>& visit) {
    if (cur == target) {
        visit(p);
        return;
    }
    for (const auto& st : s[cur]) {
        if (seen[st.to]) continue;
        seen[st.to] = true;
        p.nodes.push_back(st.to);
        p.edges.push_back(st);
        all_paths(s, st.to, target, seen, p, visit);
        p.nodes.pop_back();
        p.edges.pop_back();
        seen[st.to] = false;
    }
}

void for_each_path(const Admg& g, int a, int b, const std::function<void(const Path&)>& visit) {
    auto s = steps_of(g);
    std::vector<bool> seen(g.size(), false);
    seen[a] = true;
    Path p{{a}, {}};
    all_paths(s, a, b, seen, p, visit);
}

bool path_open(const Admg& g, const Path& p, const NodeSet& z) {
    const auto anz = g.ancestors(z);
    for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
        const bool collider = p.edges[i - 1].arrow_at_to && p.edges[i].arrow_at_from;
        const int v = p.nodes[i];
        if (collider ? !(z.empty() ? false : anz.count(v) > 0) : z.count(v) > 0) return false;
    }
    return true;
}

bool brute_separated(const Admg& g, const NodeSet& a, const NodeSet& b, const NodeSet& z) {
    for (int u : a)
        for (int v : b) {
            bool open = false;
            for_each_path(g, u, v, [&](const Path& p) { open = open || path_open(g, p, z); });
            if (open) return false;
        }
    return true;
}

bool is_causal(const Path& p) {
    for (const auto& e : p.edges)
        if (e.arrow_at_from || !e.arrow_at_to) return false;
    return true;
}

// Adjustment criterion straight from its path-based definition.
bool brute_adjustment(const Admg& g, int x, int y, const NodeSet& z) {
    NodeSet on_causal;
    std::vector<Path> noncausal;
    for_each_path(g, x, y, [&](const Path& p) {
        if (is_causal(p)) {
            for (std::size_t i = 1; i < p.nodes.size(); ++i) on_causal.insert(p.nodes[i]);
        } else {
            noncausal.push_back(p);
        }
    });
    const auto forb = on_causal.empty() ? NodeSet{} : g.descendants(on_causal);
    for (int v : z)
        if (forb.count(v)) return false;
    for (const auto& p : noncausal)
        if (path_open(g, p, z)) return false;
    return true;
}

Admg random_admg(int n, double p_dir, double p_bi, Rng& rng) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution d(p_dir), b(p_bi);
    std::vector<std::pair<int, int>> dir, bi;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (d(rng)) dir.emplace_back(order[i], order[j]);
            if (b(rng)) bi.emplace_back(order[i], order[j]);
        }
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("V" + std::to_string(i));
    return Admg(names, std::vector<bool>(n, true), dir, bi);
}

NodeSet subset(const std::vector<int>& pool, unsigned mask) {
    NodeSet s;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (mask >> i & 1u) s.insert(pool[i]);
    return s;
}

}  // namespace

TEST(Admg, RejectsCyclesAndSelfLoops) {
    EXPECT_THROW(Admg::from_names({"A", "B"}, {{"A", "B"}, {"B", "A"}}), ValidationError);
    EXPECT_THROW(Admg::from_names({"A"}, {{"A", "A"}}), ValidationError);
    EXPECT_THROW(Admg::from_names({"A", "B"}, {{"A", "B"}, {"A", "B"}}), ValidationError);
    EXPECT_THROW(Admg::from_names({"A", "B"}, {{"A", "C"}}), Error);
}

TEST(Admg, JsonRoundTrip) {
    Admg g({"X", "Y", "L"}, {true, true, false}, {{2, 0}, {2, 1}, {0, 1}}, {{0, 1}});
    auto text = graph::admg_to_json(g);
    auto h = graph::admg_from_json(text);
    EXPECT_EQ(graph::admg_to_json(h), text);
    EXPECT_FALSE(h.observed(2));
    EXPECT_TRUE(h.has_bidirected(1, 0));
}

TEST(MSeparation, Chain) {
    auto g = Admg::from_names({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    EXPECT_TRUE(graph::m_separated(g, {0}, {2}, {1}));
    EXPECT_FALSE(graph::m_separated(g, {0}, {2}, {}));
}

TEST(MSeparation, Collider) {
    auto g = Admg::from_names({"A", "B", "C"}, {{"A", "B"}, {"C", "B"}});
    EXPECT_TRUE(graph::m_separated(g, {0}, {2}, {}));
    EXPECT_FALSE(graph::m_separated(g, {0}, {2}, {1}));
}

TEST(MSeparation, BidirectedEdgeConnects) {
    auto g = Admg::from_names({"A", "B"}, {}, {{"A", "B"}});
    EXPECT_FALSE(graph::m_separated(g, {0}, {1}, {}));
}

TEST(MSeparation, OverlappingSetsRejected) {
    auto g = Admg::from_names({"A", "B"}, {{"A", "B"}});
    EXPECT_THROW(graph::m_separated(g, {0}, {0}, {}), ValidationError);
}

TEST(MSeparation, AgreesWithPathEnumeration) {
    Rng rng(123);
    int checked = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const int n = 3 + trial % 5;
        auto g = random_admg(n, 0.4, 0.15, rng);
        std::uniform_int_distribution<int> pick(0, n - 1);
        const int a = pick(rng);
        int b = pick(rng);
        if (a == b) continue;
        std::vector<int> rest;
        for (int v = 0; v < n; ++v)
            if (v != a && v != b) rest.push_back(v);
        for (unsigned m = 0; m < (1u << rest.size()); ++m) {
            auto z = subset(rest, m);
            ASSERT_EQ(graph::m_separated(g, {a}, {b}, z), brute_separated(g, {a}, {b}, z))
                << graph::admg_to_json(g) << " a=" << a << " b=" << b;
            ++checked;
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(ForbiddenSet, Mediator) {
    auto g = Admg::from_names({"X", "M", "Y"}, {{"X", "M"}, {"M", "Y"}});
    EXPECT_EQ(graph::forbidden_set(g, 0, 2), (NodeSet{1, 2}));
}

TEST(ForbiddenSet, DirectEdgeOnly) {
    auto g = Admg::from_names({"X", "Y"}, {{"X", "Y"}});
    EXPECT_EQ(graph::forbidden_set(g, 0, 1), (NodeSet{1}));
}

TEST(ForbiddenSet, DescendantOfMediator) {
    auto g = Admg::from_names({"X", "M", "Y", "D"}, {{"X", "M"}, {"M", "Y"}, {"M", "D"}});
    EXPECT_EQ(graph::forbidden_set(g, 0, 2), (NodeSet{1, 2, 3}));
}

TEST(AdjustmentCriterion, ConfounderGraph) {
    auto g = Admg::from_names({"C", "D", "AE"}, {{"C", "D"}, {"C", "AE"}, {"D", "AE"}});
    EXPECT_TRUE(graph::satisfies_adjustment_criterion(g, 1, 2, {0}));
    EXPECT_FALSE(graph::satisfies_adjustment_criterion(g, 1, 2, {}));
}

TEST(AdjustmentCriterion, EmptySetSufficesWhenCovariateIsDownstreamOfTreatment) {
    auto g = Admg::from_names({"C", "D", "AE"}, {{"D", "C"}, {"C", "AE"}, {"D", "AE"}});
    EXPECT_TRUE(graph::satisfies_adjustment_criterion(g, 1, 2, {}));
    EXPECT_FALSE(graph::satisfies_adjustment_criterion(g, 1, 2, {0}));
}

TEST(AdjustmentCriterion, LatentConfoundingLeavesNoObservedSet) {
    Admg g({"C", "D", "AE", "L"}, {true, true, true, false},
           {{0, 1}, {0, 2}, {1, 2}, {3, 1}, {3, 2}});
    EXPECT_FALSE(graph::satisfies_adjustment_criterion(g, 1, 2, {}));
    EXPECT_FALSE(graph::satisfies_adjustment_criterion(g, 1, 2, {0}));
    EXPECT_THROW(graph::satisfies_adjustment_criterion(g, 1, 2, {3}), ValidationError);
}

TEST(AdjustmentCriterion, MBias) {
    auto g = Admg::from_names({"X", "A", "M", "B", "Y"},
                              {{"A", "X"}, {"A", "M"}, {"B", "M"}, {"B", "Y"}, {"X", "Y"}});
    EXPECT_FALSE(graph::satisfies_adjustment_criterion(g, 0, 4, {2}));
    EXPECT_TRUE(graph::satisfies_adjustment_criterion(g, 0, 4, {}));
    EXPECT_TRUE(graph::satisfies_adjustment_criterion(g, 0, 4, {1, 2}));
}

TEST(AdjustmentCriterion, AgreesWithPathDefinition) {
    Rng rng(77);
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 4 + trial % 4;
        auto g = random_admg(n, 0.45, 0.1, rng);
        auto topo = g.topological_order();
        const int x = topo.front(), y = topo.back();
        std::vector<int> rest;
        for (int v = 0; v < n; ++v)
            if (v != x && v != y) rest.push_back(v);
        for (unsigned m = 0; m < (1u << rest.size()); ++m) {
            auto z = subset(rest, m);
            ASSERT_EQ(graph::satisfies_adjustment_criterion(g, x, y, z), brute_adjustment(g, x, y, z))
                << graph::admg_to_json(g);
            ++checked;
        }
    }
    EXPECT_GT(checked, 500);
}
