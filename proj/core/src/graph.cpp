#include <algorithm>
#include <deque>

#include <json.hpp>

#include "adjfas/graph.hpp"

namespace adjfas::graph {

Admg::Admg(std::vector<std::string> nodes, std::vector<bool> observed, std::vector<std::pair<int, int>> directed,
           std::vector<std::pair<int, int>> bidirected)
    : names_(std::move(nodes)), observed_(std::move(observed)), directed_(std::move(directed)),
      bidirected_(std::move(bidirected)) {
    const int n = size();
    if (static_cast<int>(observed_.size()) != n) throw ValidationError("graph: observed flags do not match nodes");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (names_[i] == names_[j]) throw ValidationError("graph: duplicate node '" + names_[i] + "'");
    parents_.assign(n, {});
    children_.assign(n, {});
    spouses_.assign(n, {});
    auto check = [n](int a, int b) {
        if (a < 0 || b < 0 || a >= n || b >= n) throw ValidationError("graph: edge endpoint out of range");
        if (a == b) throw ValidationError("graph: self loop");
    };
    for (auto [a, b] : directed_) {
        check(a, b);
        if (std::find(children_[a].begin(), children_[a].end(), b) != children_[a].end())
            throw ValidationError("graph: duplicate edge " + names_[a] + " -> " + names_[b]);
        children_[a].push_back(b);
        parents_[b].push_back(a);
    }
    for (auto& [a, b] : bidirected_) {
        check(a, b);
        if (a > b) std::swap(a, b);
        if (std::find(spouses_[a].begin(), spouses_[a].end(), b) != spouses_[a].end())
            throw ValidationError("graph: duplicate edge " + names_[a] + " <-> " + names_[b]);
        spouses_[a].push_back(b);
        spouses_[b].push_back(a);
    }
    for (auto* adj : {&parents_, &children_, &spouses_})
        for (auto& l : *adj) std::sort(l.begin(), l.end());
    if (static_cast<int>(topological_order().size()) != n) throw ValidationError("graph: directed part has a cycle");
}

Admg Admg::from_names(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& directed,
                      const std::vector<std::pair<std::string, std::string>>& bidirected) {
    auto idx = [&](const std::string& s) {
        auto it = std::find(nodes.begin(), nodes.end(), s);
        if (it == nodes.end()) throw LookupError("unknown node '" + s + "'");
        return static_cast<int>(it - nodes.begin());
    };
    std::vector<std::pair<int, int>> d, b;
    for (const auto& [u, v] : directed) d.emplace_back(idx(u), idx(v));
    for (const auto& [u, v] : bidirected) b.emplace_back(idx(u), idx(v));
    std::vector<bool> obs(nodes.size(), true);
    return Admg(std::move(nodes), std::move(obs), std::move(d), std::move(b));
}

int Admg::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw LookupError("unknown node '" + name + "'");
    return static_cast<int>(it - names_.begin());
}

NodeSet Admg::indices_of(const std::vector<std::string>& names) const {
    NodeSet s;
    for (const auto& n : names) s.insert(index_of(n));
    return s;
}

bool Admg::has_directed(int from, int to) const {
    const auto& c = children_.at(from);
    return std::binary_search(c.begin(), c.end(), to);
}

bool Admg::has_bidirected(int a, int b) const {
    const auto& s = spouses_.at(a);
    return std::binary_search(s.begin(), s.end(), b);
}

NodeSet Admg::ancestors(const NodeSet& of) const {
    NodeSet out(of);
    std::vector<int> stack(of.begin(), of.end());
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int p : parents_[v])
            if (out.insert(p).second) stack.push_back(p);
    }
    return out;
}

NodeSet Admg::descendants(const NodeSet& of) const {
    NodeSet out(of);
    std::vector<int> stack(of.begin(), of.end());
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int c : children_[v])
            if (out.insert(c).second) stack.push_back(c);
    }
    return out;
}

std::vector<int> Admg::topological_order() const {
    const int n = size();
    std::vector<int> indeg(n, 0), order;
    for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(parents_[v].size());
    std::deque<int> ready;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        int v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (int c : children_[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    return order;
}

Admg Admg::without_directed(const std::vector<std::pair<int, int>>& removed) const {
    std::vector<std::pair<int, int>> kept;
    for (const auto& e : directed_)
        if (std::find(removed.begin(), removed.end(), e) == removed.end()) kept.push_back(e);
    return Admg(names_, observed_, std::move(kept), bidirected_);
}

Admg Admg::with_nodes(const std::vector<std::string>& names, const std::vector<bool>& observed,
                      const std::vector<std::pair<int, int>>& directed) const {
    auto n = names_;
    n.insert(n.end(), names.begin(), names.end());
    auto o = observed_;
    o.insert(o.end(), observed.begin(), observed.end());
    auto d = directed_;
    d.insert(d.end(), directed.begin(), directed.end());
    return Admg(std::move(n), std::move(o), std::move(d), bidirected_);
}

std::vector<int> Admg::observed_nodes() const {
    std::vector<int> out;
    for (int v = 0; v < size(); ++v)
        if (observed_[v]) out.push_back(v);
    return out;
}

bool m_separated(const Admg& g, const NodeSet& a, const NodeSet& b, const NodeSet& z) {
    const int n = g.size();
    auto check = [n](const NodeSet& s) {
        for (int v : s)
            if (v < 0 || v >= n) throw LookupError("m_separated: node index out of range");
    };
    check(a);
    check(b);
    check(z);
    for (int v : a)
        if (b.count(v) || z.count(v)) throw ValidationError("m_separated: sets must be disjoint");
    for (int v : b)
        if (z.count(v)) throw ValidationError("m_separated: sets must be disjoint");

    const NodeSet anz = g.ancestors(z);
    // State (v, head): v was entered through an edge with an arrowhead at v.
    std::vector<char> seen(2 * static_cast<std::size_t>(n), 0);
    std::vector<std::pair<int, bool>> stack;
    for (int s : a) {
        // Leaving a start node is never blocked; mark both arrival kinds as
        // seen and expand its edges directly.
        seen[2 * s] = seen[2 * s + 1] = 1;
        for (int c : g.children(s)) stack.emplace_back(c, true);
        for (int p : g.parents(s)) stack.emplace_back(p, false);
        for (int sp : g.spouses(s)) stack.emplace_back(sp, true);
    }
    while (!stack.empty()) {
        auto [v, head] = stack.back();
        stack.pop_back();
        auto& mark = seen[2 * static_cast<std::size_t>(v) + (head ? 1 : 0)];
        if (mark) continue;
        mark = 1;
        if (b.count(v)) return false;
        const bool in_z = z.count(v) > 0;
        const bool collider_open = anz.count(v) > 0;
        // Leaving v along an edge with a tail at v: v is a non-collider.
        if (!in_z)
            for (int c : g.children(v)) stack.emplace_back(c, true);
        // Leaving v along an edge with an arrowhead at v: collider iff we
        // also arrived with an arrowhead.
        const bool pass_head = head ? collider_open : !in_z;
        if (pass_head) {
            for (int p : g.parents(v)) stack.emplace_back(p, false);
            for (int sp : g.spouses(v)) stack.emplace_back(sp, true);
        }
    }
    return true;
}

namespace {

// Nodes on proper causal paths from x to y, x excluded.
NodeSet causal_nodes(const Admg& g, int x, int y) {
    // Descendants of x reachable without revisiting x (acyclic, so plain
    // descendants), intersected with ancestors of y.
    NodeSet dx = g.descendants({x});
    dx.erase(x);
    NodeSet ay = g.ancestors({y});
    NodeSet out;
    for (int v : dx)
        if (ay.count(v)) out.insert(v);
    return out;
}

}  // namespace

NodeSet forbidden_set(const Admg& g, int x, int y) {
    if (x == y) throw ValidationError("forbidden_set: x and y must differ");
    if (x < 0 || y < 0 || x >= g.size() || y >= g.size()) throw LookupError("forbidden_set: node out of range");
    return g.descendants(causal_nodes(g, x, y));
}

Admg proper_backdoor_graph(const Admg& g, int x, int y) {
    const NodeSet cn = causal_nodes(g, x, y);
    std::vector<std::pair<int, int>> removed;
    for (int c : g.children(x))
        if (cn.count(c)) removed.emplace_back(x, c);
    return g.without_directed(removed);
}

bool satisfies_adjustment_criterion(const Admg& g, int x, int y, const NodeSet& z) {
    if (z.count(x) || z.count(y)) throw ValidationError("adjustment criterion: z must exclude x and y");
    for (int v : z) {
        if (v < 0 || v >= g.size()) throw LookupError("adjustment criterion: node out of range");
        if (!g.observed(v)) throw ValidationError("adjustment criterion: z contains latent node '" + g.name(v) + "'");
    }
    const NodeSet forb = forbidden_set(g, x, y);
    for (int v : z)
        if (forb.count(v)) return false;
    return m_separated(proper_backdoor_graph(g, x, y), {x}, {y}, z);
}

std::string admg_to_json(const Admg& g) {
    nlohmann::json j;
    j["nodes"] = g.names();
    j["observed"] = g.observed_flags();
    j["directed"] = nlohmann::json::array();
    for (auto [a, b] : g.directed_edges()) j["directed"].push_back({g.name(a), g.name(b)});
    j["bidirected"] = nlohmann::json::array();
    for (auto [a, b] : g.bidirected_edges()) j["bidirected"].push_back({g.name(a), g.name(b)});
    return j.dump(2) + "\n";
}

Admg admg_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        auto nodes = j.at("nodes").get<std::vector<std::string>>();
        std::vector<bool> obs(nodes.size(), true);
        if (j.contains("observed")) obs = j.at("observed").get<std::vector<bool>>();
        auto idx = [&](const std::string& s) {
            auto it = std::find(nodes.begin(), nodes.end(), s);
            if (it == nodes.end()) throw LookupError("graph JSON: unknown node '" + s + "'");
            return static_cast<int>(it - nodes.begin());
        };
        std::vector<std::pair<int, int>> d, b;
        for (const auto& e : j.at("directed")) d.emplace_back(idx(e.at(0)), idx(e.at(1)));
        if (j.contains("bidirected"))
            for (const auto& e : j.at("bidirected")) b.emplace_back(idx(e.at(0)), idx(e.at(1)));
        return Admg(std::move(nodes), std::move(obs), std::move(d), std::move(b));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("graph JSON: ") + e.what());
    }
}

}  // namespace adjfas::graph
