#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "adjfas/bayesnet.hpp"

namespace adjfas::bayesnet {

namespace {

/// Table factor over sorted variables, row-major (last variable fastest).
struct Factor {
    std::vector<int> vars;
    std::vector<int> cards;
    std::vector<double> vals;
};

std::vector<std::size_t> strides_of(const std::vector<int>& cards) {
    return data::strides_for(std::span<const int>(cards));
}

// Factor for node v's CPT with evidence applied (observed variables are
// sliced out).
Factor cpt_factor(const ParamInstantiation& p, int v, const Assignment& evidence) {
    std::vector<int> family = p.dag.parents(v);
    family.push_back(v);
    // Layout of the CPT: parents ascending, then v.
    std::vector<int> fam_cards;
    for (int u : family) fam_cards.push_back(p.cards[u]);
    const auto fam_strides = strides_of(fam_cards);

    Factor f;
    std::vector<int> sorted = family;
    std::sort(sorted.begin(), sorted.end());
    for (int u : sorted)
        if (!evidence.count(u)) {
            f.vars.push_back(u);
            f.cards.push_back(p.cards[u]);
        }
    std::size_t size = 1;
    for (int c : f.cards) size *= static_cast<std::size_t>(c);
    f.vals.resize(size);

    // Offset into CPT contributed by evidence, and stride of each free var.
    std::size_t base = 0;
    std::vector<std::size_t> free_stride(f.vars.size());
    for (std::size_t k = 0; k < family.size(); ++k) {
        auto it = evidence.find(family[k]);
        if (it != evidence.end()) {
            if (it->second < 0 || it->second >= p.cards[family[k]]) throw ValidationError("evidence value out of range");
            base += static_cast<std::size_t>(it->second) * fam_strides[k];
        } else {
            auto pos = std::lower_bound(f.vars.begin(), f.vars.end(), family[k]) - f.vars.begin();
            free_stride[pos] = fam_strides[k];
        }
    }
    std::vector<int> idx(f.vars.size(), 0);
    std::size_t off = base;
    const auto& cpt = p.cpts[v];
    for (std::size_t i = 0; i < size; ++i) {
        f.vals[i] = cpt[off];
        for (std::size_t k = f.vars.size(); k-- > 0;) {
            if (++idx[k] < f.cards[k]) {
                off += free_stride[k];
                break;
            }
            off -= free_stride[k] * static_cast<std::size_t>(idx[k] - 1);
            idx[k] = 0;
        }
    }
    return f;
}

Factor multiply(const Factor& a, const Factor& b) {
    Factor r;
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(r.vars));
    std::vector<std::size_t> sa(r.vars.size(), 0), sb(r.vars.size(), 0);
    const auto sta = strides_of(a.cards);
    const auto stb = strides_of(b.cards);
    std::size_t size = 1;
    for (std::size_t k = 0; k < r.vars.size(); ++k) {
        const int v = r.vars[k];
        auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
        auto ib = std::lower_bound(b.vars.begin(), b.vars.end(), v);
        int card;
        if (ia != a.vars.end() && *ia == v) {
            card = a.cards[ia - a.vars.begin()];
            sa[k] = sta[ia - a.vars.begin()];
        } else {
            card = b.cards[ib - b.vars.begin()];
        }
        if (ib != b.vars.end() && *ib == v) sb[k] = stb[ib - b.vars.begin()];
        r.cards.push_back(card);
        size *= static_cast<std::size_t>(card);
    }
    r.vals.resize(size);
    std::vector<int> idx(r.vars.size(), 0);
    std::size_t oa = 0, ob = 0;
    for (std::size_t i = 0; i < size; ++i) {
        r.vals[i] = a.vals[oa] * b.vals[ob];
        for (std::size_t k = r.vars.size(); k-- > 0;) {
            if (++idx[k] < r.cards[k]) {
                oa += sa[k];
                ob += sb[k];
                break;
            }
            oa -= sa[k] * static_cast<std::size_t>(idx[k] - 1);
            ob -= sb[k] * static_cast<std::size_t>(idx[k] - 1);
            idx[k] = 0;
        }
    }
    return r;
}

Factor sum_out(const Factor& f, int var) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
    Factor r;
    for (std::size_t k = 0; k < f.vars.size(); ++k)
        if (k != pos) {
            r.vars.push_back(f.vars[k]);
            r.cards.push_back(f.cards[k]);
        }
    std::size_t inner = 1;
    for (std::size_t k = pos + 1; k < f.cards.size(); ++k) inner *= static_cast<std::size_t>(f.cards[k]);
    const std::size_t card = static_cast<std::size_t>(f.cards[pos]);
    const std::size_t outer = f.vals.size() / (inner * card);
    r.vals.assign(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t c = 0; c < card; ++c) {
            const double* src = f.vals.data() + (o * card + c) * inner;
            double* dst = r.vals.data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    return r;
}

std::vector<int> min_fill_order(const std::vector<Factor>& factors, const std::set<int>& to_eliminate) {
    std::map<int, std::set<int>> adj;
    for (int v : to_eliminate) adj[v];
    for (const auto& f : factors)
        for (int a : f.vars)
            for (int b : f.vars)
                if (a != b) adj[a].insert(b);
    std::set<int> remaining = to_eliminate;
    std::vector<int> order;
    while (!remaining.empty()) {
        int best = -1;
        std::size_t best_fill = SIZE_MAX;
        for (int v : remaining) {
            const auto& nb = adj[v];
            std::size_t fill = 0;
            for (auto i = nb.begin(); i != nb.end(); ++i)
                for (auto j = std::next(i); j != nb.end(); ++j)
                    if (!adj[*i].count(*j)) ++fill;
            if (fill < best_fill) {
                best_fill = fill;
                best = v;
            }
        }
        const auto nb = adj[best];
        for (int a : nb) {
            adj[a].erase(best);
            for (int b : nb)
                if (a != b) adj[a].insert(b);
        }
        adj.erase(best);
        remaining.erase(best);
        order.push_back(best);
    }
    return order;
}

}  // namespace

std::vector<double> joint_with_evidence(const ParamInstantiation& params, const std::vector<int>& vars,
                                        const Assignment& evidence, const std::optional<std::vector<int>>& order) {
    const int n = params.size();
    std::set<int> query;
    for (int v : vars) {
        if (v < 0 || v >= n) throw LookupError("inference: node index out of range");
        if (evidence.count(v)) throw ValidationError("inference: queried variable is also evidence");
        if (!query.insert(v).second) throw ValidationError("inference: duplicate query variable");
    }
    for (const auto& [v, val] : evidence)
        if (v < 0 || v >= n) throw LookupError("inference: evidence node out of range");

    // Only ancestors of the query and evidence matter; the rest sum to one.
    graph::NodeSet seed(query.begin(), query.end());
    for (const auto& [v, val] : evidence) seed.insert(v);
    const auto relevant = params.dag.ancestors(seed);

    std::vector<Factor> factors;
    for (int v : relevant) factors.push_back(cpt_factor(params, v, evidence));

    std::set<int> hidden;
    for (int v : relevant)
        if (!query.count(v) && !evidence.count(v)) hidden.insert(v);

    std::vector<int> elim;
    if (order) {
        for (int v : *order)
            if (hidden.count(v) && std::find(elim.begin(), elim.end(), v) == elim.end()) elim.push_back(v);
        if (elim.size() != hidden.size()) throw ValidationError("inference: elimination order misses a hidden node");
    } else {
        elim = min_fill_order(factors, hidden);
    }

    for (int v : elim) {
        Factor prod{{}, {}, {1.0}};
        std::vector<Factor> rest;
        for (auto& f : factors) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), v)) {
                prod = multiply(prod, f);
            } else {
                rest.push_back(std::move(f));
            }
        }
        rest.push_back(sum_out(prod, v));
        factors = std::move(rest);
    }
    Factor result{{}, {}, {1.0}};
    for (const auto& f : factors) result = multiply(result, f);

    // Permute from sorted order into the caller's order.
    std::vector<int> out_cards;
    for (int v : vars) out_cards.push_back(params.cards[v]);
    std::size_t size = 1;
    for (int c : out_cards) size *= static_cast<std::size_t>(c);
    std::vector<double> out(size);
    const auto rs = strides_of(result.cards);
    std::vector<std::size_t> map_stride(vars.size());
    for (std::size_t k = 0; k < vars.size(); ++k)
        map_stride[k] = rs[std::lower_bound(result.vars.begin(), result.vars.end(), vars[k]) - result.vars.begin()];
    std::vector<int> idx(vars.size(), 0);
    std::size_t off = 0;
    for (std::size_t i = 0; i < size; ++i) {
        out[i] = result.vals[off];
        for (std::size_t k = vars.size(); k-- > 0;) {
            if (++idx[k] < out_cards[k]) {
                off += map_stride[k];
                break;
            }
            off -= map_stride[k] * static_cast<std::size_t>(idx[k] - 1);
            idx[k] = 0;
        }
    }
    return out;
}

std::vector<double> joint_marginal(const ParamInstantiation& params, const std::vector<int>& vars) {
    auto j = joint_with_evidence(params, vars);
    const double s = std::accumulate(j.begin(), j.end(), 0.0);
    if (s > 0.0)
        for (auto& v : j) v /= s;
    return j;
}

std::optional<Distribution> infer_conditional(const ParamInstantiation& params, int target, const Assignment& evidence) {
    auto j = joint_with_evidence(params, {target}, evidence);
    const double s = std::accumulate(j.begin(), j.end(), 0.0);
    if (!(s > 0.0)) return std::nullopt;
    for (auto& v : j) v /= s;
    return j;
}

std::vector<double> enumerate_joint(const ParamInstantiation& params, std::size_t max_states) {
    const int n = params.size();
    std::size_t states = 1;
    for (int c : params.cards) {
        states *= static_cast<std::size_t>(c);
        if (states > max_states) throw EnumerationRefused("enumerate_joint: state space too large");
    }
    std::vector<int> cards = params.cards;
    std::vector<double> joint(states);
    std::vector<int> x(n, 0);
    std::vector<std::vector<std::size_t>> fam_strides(n);
    for (int v = 0; v < n; ++v) {
        std::vector<int> fc;
        for (int p : params.dag.parents(v)) fc.push_back(cards[p]);
        fc.push_back(cards[v]);
        fam_strides[v] = strides_of(fc);
    }
    for (std::size_t i = 0; i < states; ++i) {
        double p = 1.0;
        for (int v = 0; v < n && p != 0.0; ++v) {
            const auto& pa = params.dag.parents(v);
            std::size_t off = 0;
            for (std::size_t k = 0; k < pa.size(); ++k) off += static_cast<std::size_t>(x[pa[k]]) * fam_strides[v][k];
            off += static_cast<std::size_t>(x[v]);
            p *= params.cpts[v][off];
        }
        joint[i] = p;
        for (int k = n; k-- > 0;) {
            if (++x[k] < cards[k]) break;
            x[k] = 0;
        }
    }
    return joint;
}

}  // namespace adjfas::bayesnet
