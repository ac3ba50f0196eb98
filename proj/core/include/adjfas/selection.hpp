#ifndef ADJFAS_SELECTION_HPP
#define ADJFAS_SELECTION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adjfas/bayesnet.hpp"
#include "adjfas/score.hpp"

namespace adjfas::selection {

/// Observational network augmented with a binary selection indicator S_i per
/// reported variable V_i (edge V_i -> S_i) and a conjunction node S with
/// parents S_1..S_k. P(V | S = 1) models the trial population before
/// randomization.
struct SelectionBn {
    bayesnet::ParamInstantiation base;
    /// Node indices (in `base`) of the reported variables, ascending.
    std::vector<int> selected_vars;
    /// P(S_i = 1 | V_i = v) per selected variable, scaled so max_v = 1.
    std::vector<Distribution> theta_s;
    /// max_i || P(V_i | S = 1) - reported_i ||_inf after solving.
    double residual = 0.0;
    int sweeps = 0;

    /// Base network plus S_i nodes (named "S_<var>") and the node "S".
    bayesnet::ParamInstantiation expanded() const;
    /// Index of S in expanded().
    int s_node() const { return base.size() + static_cast<int>(selected_vars.size()); }
};

struct SolverOptions {
    double tol = 1e-6;
    double damping = 0.5;
    int max_sweeps = 10000;
    /// Random starting point in [0.05, 1]; all ones when empty.
    std::optional<std::uint64_t> init_seed;
};

/// Solves for selection parameters that make every P(V_i | S = 1) equal the
/// reported marginal. Marginal vectors may be longer than the variable's
/// cardinality only if the extra categories carry no mass. Throws
/// InfeasibleSelection when mass sits on a category with zero probability,
/// and LookupError for unknown variables.
SelectionBn build_selection_bn(const bayesnet::ParamInstantiation& params,
                               const std::map<std::string, Distribution>& marginals, const SolverOptions& options = {});

/// P(target | evidence, S = 1); empty when the conditioning event has zero
/// probability.
std::optional<Distribution> selected_conditional(const SelectionBn& sbn, int target,
                                                 const bayesnet::Assignment& evidence = {});

/// P(vars | S = 1), normalized, row-major in the given order.
std::vector<double> selected_joint(const SelectionBn& sbn, const std::vector<int>& vars);

/// Adjustment formula evaluated in the selected population:
/// sum_z P(Y | x, z, S=1) P(z | S=1).
std::optional<Distribution> selected_adjusted_distribution(const SelectionBn& sbn, int x, int y,
                                                           const std::vector<int>& z, int x_value);

/// Selection-aware FAS: arms are scored against the selected-population
/// adjustment, while the reported estimate is the unselected one. NotExists
/// yields an N/A estimate.
score::FasResult find_adjustment_set_selected(const data::CategoricalTable& table,
                                              const data::ExperimentSummary& exp,
                                              const score::FasConfig& config = {});

score::FasResult score_hypothesis_selected(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                                           const score::Hypothesis& h, const score::FasConfig& config = {});

/// Rejects reported mass on categories never observed in the table.
void check_support(const data::CategoricalTable& table, const std::map<std::string, Distribution>& marginals);

/// Learns the observational network over the reported variables and solves
/// the selection parameters on its posterior mean.
SelectionBn selection_from_data(const data::CategoricalTable& table, const data::ExperimentSummary& exp,
                                const score::FasConfig& config = {});

std::string selection_to_json(const SelectionBn& sbn, const std::map<std::string, Distribution>& reported = {});

}  // namespace adjfas::selection

#endif  // ADJFAS_SELECTION_HPP
