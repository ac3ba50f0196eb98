#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "adjfas/bayesnet.hpp"

namespace adjfas::bayesnet {

double bdeu_family_score(const data::CategoricalTable& table, int child, const std::vector<int>& parents, double ess) {
    std::vector<std::size_t> vars;
    for (int p : parents) vars.push_back(static_cast<std::size_t>(p));
    vars.push_back(static_cast<std::size_t>(child));
    const auto t = data::contingency_counts(table, std::span<const std::size_t>(vars));
    const int r = table.cardinality(child);
    const std::size_t q = t.counts.size() / r;
    const double a_j = ess / static_cast<double>(q);
    const double a_jk = a_j / r;
    const double lg_aj = std::lgamma(a_j);
    const double lg_ajk = std::lgamma(a_jk);
    double score = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        std::int64_t nij = 0;
        for (int k = 0; k < r; ++k) {
            const auto n = t.counts[j * r + k];
            nij += n;
            if (n > 0) score += std::lgamma(a_jk + static_cast<double>(n)) - lg_ajk;
        }
        if (nij > 0) score += lg_aj - std::lgamma(a_j + static_cast<double>(nij));
    }
    return score;
}

double bdeu_score(const data::CategoricalTable& table, const graph::Admg& dag, double ess) {
    double s = 0.0;
    for (int v = 0; v < dag.size(); ++v) s += bdeu_family_score(table, v, dag.parents(v), ess);
    return s;
}

namespace {

struct FamilyKey {
    int child;
    std::uint64_t mask;
    bool operator==(const FamilyKey&) const = default;
};

struct FamilyKeyHash {
    std::size_t operator()(const FamilyKey& k) const { return mix64(k.mask ^ (std::uint64_t(k.child) << 58)); }
};

class HillClimber {
public:
    HillClimber(const data::CategoricalTable& table, const StructureConfig& cfg)
        : table_(table), cfg_(cfg), n_(static_cast<int>(table.num_vars())) {}

    double family(int child, std::uint64_t mask) {
        FamilyKey key{child, mask};
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        std::vector<int> parents;
        for (int p = 0; p < n_; ++p)
            if (mask >> p & 1u) parents.push_back(p);
        double s = bdeu_family_score(table_, child, parents, cfg_.ess);
        cache_.emplace(key, s);
        return s;
    }

    // Returns parent masks of the local optimum and its score.
    std::pair<std::vector<std::uint64_t>, double> climb(const std::vector<int>& order) {
        std::vector<std::uint64_t> pa(n_, 0);
        std::vector<double> fam(n_);
        for (int v = 0; v < n_; ++v) fam[v] = family(v, 0);

        while (true) {
            double best = 1e-9;
            int kind = -1, bu = -1, bv = -1;
            for (int u : order) {
                for (int v : order) {
                    if (u == v) continue;
                    const std::uint64_t bu_bit = std::uint64_t{1} << u;
                    const std::uint64_t bv_bit = std::uint64_t{1} << v;
                    if (pa[v] & bu_bit) {
                        const double del = family(v, pa[v] & ~bu_bit) - fam[v];
                        if (del > best) {
                            best = del;
                            kind = 1, bu = u, bv = v;
                        }
                        if (std::popcount(pa[u]) < cfg_.max_parents && !reaches(pa, u, v, true)) {
                            const double rev = del + family(u, pa[u] | bv_bit) - fam[u];
                            if (rev > best) {
                                best = rev;
                                kind = 2, bu = u, bv = v;
                            }
                        }
                    } else if (!(pa[u] & bv_bit)) {
                        if (std::popcount(pa[v]) >= cfg_.max_parents || reaches(pa, v, u, false)) continue;
                        const double add = family(v, pa[v] | bu_bit) - fam[v];
                        if (add > best) {
                            best = add;
                            kind = 0, bu = u, bv = v;
                        }
                    }
                }
            }
            if (kind < 0) break;
            const std::uint64_t bu_bit = std::uint64_t{1} << bu;
            const std::uint64_t bv_bit = std::uint64_t{1} << bv;
            if (kind == 0) {
                pa[bv] |= bu_bit;
            } else if (kind == 1) {
                pa[bv] &= ~bu_bit;
            } else {
                pa[bv] &= ~bu_bit;
                pa[bu] |= bv_bit;
                fam[bu] = family(bu, pa[bu]);
            }
            fam[bv] = family(bv, pa[bv]);
        }
        return {pa, std::accumulate(fam.begin(), fam.end(), 0.0)};
    }

private:
    // Is there a directed path from `from` to `to`? With skip_direct, the
    // edge from->to itself is ignored (used for reversal checks).
    bool reaches(const std::vector<std::uint64_t>& pa, int from, int to, bool skip_direct) const {
        std::vector<char> seen(n_, 0);
        std::vector<int> stack{from};
        seen[from] = 1;
        while (!stack.empty()) {
            int w = stack.back();
            stack.pop_back();
            for (int c = 0; c < n_; ++c) {
                if (!(pa[c] >> w & 1u) || seen[c]) continue;
                if (skip_direct && w == from && c == to) continue;
                if (c == to) return true;
                seen[c] = 1;
                stack.push_back(c);
            }
        }
        return false;
    }

    const data::CategoricalTable& table_;
    StructureConfig cfg_;
    int n_;
    std::unordered_map<FamilyKey, double, FamilyKeyHash> cache_;
};

}  // namespace

graph::Admg learn_structure(const data::CategoricalTable& table, const StructureConfig& config) {
    const int n = static_cast<int>(table.num_vars());
    if (n > 63) throw ValidationError("learn_structure: at most 63 variables are supported");
    if (table.num_rows() == 0) throw ValidationError("learn_structure: table has no rows");

    HillClimber hc(table, config);
    std::vector<std::uint64_t> best_pa(n, 0);
    double best_score = -INFINITY;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int r = 0; r < std::max(1, config.restarts); ++r) {
        if (r > 0) {
            Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(r)}));
            std::shuffle(order.begin(), order.end(), rng);
        }
        auto [pa, score] = hc.climb(order);
        if (score > best_score + 1e-9) {
            best_score = score;
            best_pa = pa;
        }
    }
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v < n; ++v)
        for (int p = 0; p < n; ++p)
            if (best_pa[v] >> p & 1u) edges.emplace_back(p, v);
    return graph::Admg(table.names(), std::vector<bool>(n, true), std::move(edges));
}

}  // namespace adjfas::bayesnet
