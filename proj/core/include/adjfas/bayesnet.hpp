#ifndef ADJFAS_BAYESNET_HPP
#define ADJFAS_BAYESNET_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adjfas/common.hpp"
#include "adjfas/data.hpp"
#include "adjfas/graph.hpp"

namespace adjfas::bayesnet {

/// Partial assignment: node index -> category code.
using Assignment = std::map<int, int>;

// CPT layout used throughout: for node i with sorted parents pa(i), entry
// [config * card(i) + value], where config is row-major over pa(i) in
// ascending node order (last parent fastest).

/// Discrete Bayesian network with fixed CPT values.
struct ParamInstantiation {
    graph::Admg dag;
    std::vector<int> cards;
    std::vector<std::vector<double>> cpts;
    /// Seed the CPTs were sampled from; absent for means and hand-built nets.
    std::optional<std::uint64_t> seed;

    int size() const { return dag.size(); }
    std::size_t parent_configs(int node) const;
    /// Checks shapes and that every row is a probability vector (1e-12).
    void validate() const;
};

/// Learned DAG with a product-Dirichlet posterior over its CPTs.
struct BayesNetPosterior {
    graph::Admg dag;
    std::vector<int> cards;
    /// Dirichlet pseudo-counts per node (prior + observed), CPT layout.
    std::vector<std::vector<double>> pseudo_counts;
    double ess = 1.0;

    int size() const { return dag.size(); }
    std::size_t parent_configs(int node) const;
};

struct StructureConfig {
    double ess = 1.0;
    int max_parents = 4;
    int restarts = 5;
    std::uint64_t seed = 0;
};

/// Log BDeu marginal likelihood of one family.
double bdeu_family_score(const data::CategoricalTable& table, int child, const std::vector<int>& parents, double ess);
/// Sum of family scores; node i of the DAG is column i of the table.
double bdeu_score(const data::CategoricalTable& table, const graph::Admg& dag, double ess);

/// Greedy hill climbing over edge additions, deletions and reversals under
/// BDeu, repeated with randomized tie-breaking orders; the best local
/// optimum is returned. Nodes follow the table's column order.
graph::Admg learn_structure(const data::CategoricalTable& table, const StructureConfig& config = {});

/// Pseudo-counts ess / (card * parent_configs) plus contingency counts.
BayesNetPosterior fit_posterior(const graph::Admg& dag, const data::CategoricalTable& table, double ess);

ParamInstantiation posterior_mean(const BayesNetPosterior& post);

/// Draws every CPT row independently from its Dirichlet.
ParamInstantiation sample_parameters(const BayesNetPosterior& post, Rng& rng);
/// Same, seeding a fresh stream and recording the seed on the result.
ParamInstantiation sample_parameters(const BayesNetPosterior& post, std::uint64_t seed);

/// Dirichlet draw. Works for tiny concentration parameters by sampling
/// log-gammas.
Distribution sample_dirichlet(const std::vector<double>& alpha, Rng& rng);

/// Unnormalized P(vars, evidence) by variable elimination, row-major over
/// `vars` in the given order. A custom elimination order may be supplied;
/// it must list every node that is neither queried nor observed (extra or
/// irrelevant entries are ignored). Default is min-fill.
std::vector<double> joint_with_evidence(const ParamInstantiation& params, const std::vector<int>& vars,
                                        const Assignment& evidence = {},
                                        const std::optional<std::vector<int>>& order = std::nullopt);

/// P(vars) as a normalized tensor. vars empty -> {1.0}.
std::vector<double> joint_marginal(const ParamInstantiation& params, const std::vector<int>& vars);

/// P(target | evidence). Empty optional when the evidence has probability 0.
std::optional<Distribution> infer_conditional(const ParamInstantiation& params, int target,
                                              const Assignment& evidence = {});

/// Brute-force joint over all nodes (row-major in node order). Test oracle
/// and small-world ground truth; refuses more than `max_states` states.
std::vector<double> enumerate_joint(const ParamInstantiation& params, std::size_t max_states = 1u << 22);

std::string posterior_to_json(const BayesNetPosterior& post);
BayesNetPosterior posterior_from_json(const std::string& text);
std::string instantiation_to_json(const ParamInstantiation& params);

}  // namespace adjfas::bayesnet

#endif  // ADJFAS_BAYESNET_HPP
