#ifndef ADJFAS_GRAPH_HPP
#define ADJFAS_GRAPH_HPP

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adjfas/common.hpp"

namespace adjfas::graph {

using NodeSet = std::set<int>;

/// Acyclic directed mixed graph. Latent variables can be represented either
/// as unobserved nodes or as bidirected edges between observed ones.
class Admg {
public:
    Admg() = default;

    /// Throws ValidationError on cycles, self loops, duplicate edges or
    /// unknown endpoints.
    Admg(std::vector<std::string> nodes, std::vector<bool> observed,
         std::vector<std::pair<int, int>> directed, std::vector<std::pair<int, int>> bidirected = {});

    /// Convenience constructor from names; every node observed.
    static Admg from_names(std::vector<std::string> nodes,
                           const std::vector<std::pair<std::string, std::string>>& directed,
                           const std::vector<std::pair<std::string, std::string>>& bidirected = {});

    int size() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(int v) const { return names_.at(v); }
    bool observed(int v) const { return observed_.at(v); }
    const std::vector<bool>& observed_flags() const { return observed_; }

    /// Throws LookupError.
    int index_of(const std::string& name) const;
    NodeSet indices_of(const std::vector<std::string>& names) const;

    const std::vector<int>& parents(int v) const { return parents_.at(v); }
    const std::vector<int>& children(int v) const { return children_.at(v); }
    const std::vector<int>& spouses(int v) const { return spouses_.at(v); }

    const std::vector<std::pair<int, int>>& directed_edges() const { return directed_; }
    const std::vector<std::pair<int, int>>& bidirected_edges() const { return bidirected_; }

    bool has_directed(int from, int to) const;
    bool has_bidirected(int a, int b) const;

    /// Ancestors including the nodes themselves.
    NodeSet ancestors(const NodeSet& of) const;
    /// Descendants including the nodes themselves.
    NodeSet descendants(const NodeSet& of) const;
    std::vector<int> topological_order() const;

    /// Copy without the listed directed edges.
    Admg without_directed(const std::vector<std::pair<int, int>>& removed) const;
    /// Copy with extra nodes and edges appended.
    Admg with_nodes(const std::vector<std::string>& names, const std::vector<bool>& observed,
                    const std::vector<std::pair<int, int>>& directed) const;

    std::vector<int> observed_nodes() const;

private:
    std::vector<std::string> names_;
    std::vector<bool> observed_;
    std::vector<std::pair<int, int>> directed_;
    std::vector<std::pair<int, int>> bidirected_;
    std::vector<std::vector<int>> parents_, children_, spouses_;
};

/// True iff every path between a and b is m-blocked by z.
/// Uses reachability over (node, arrival mark) states; linear in edges.
bool m_separated(const Admg& g, const NodeSet& a, const NodeSet& b, const NodeSet& z);

/// Nodes that no valid adjustment set for (x, y) may contain: descendants of
/// every non-x node lying on a proper causal path from x to y.
NodeSet forbidden_set(const Admg& g, int x, int y);

/// g with the first edge of every proper causal path from x to y removed.
Admg proper_backdoor_graph(const Admg& g, int x, int y);

/// Sound and complete adjustment criterion for a single treatment x and
/// outcome y. Throws ValidationError if z contains x, y or an unobserved node.
bool satisfies_adjustment_criterion(const Admg& g, int x, int y, const NodeSet& z);

std::string admg_to_json(const Admg& g);
Admg admg_from_json(const std::string& text);

}  // namespace adjfas::graph

#endif  // ADJFAS_GRAPH_HPP
